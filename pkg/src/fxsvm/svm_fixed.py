"""Bit-accurate fixed-point SVM inference and SGD training.

Three word lengths are tracked separately: ``b_x`` for input features,
``b_f`` for the classifier coefficients and ``b_w`` for the weights stored
and updated by the training loop.  All grids are two's complement with
fractional LSB ``2**-(bits-1)``; coefficient and weight grids get extra
integer bits when the model magnitude exceeds one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from fractions import Fraction

import numpy as np

from .datasets import Dataset, DataError
from .quant import QGrid, quantize_nearest, truncate_floor
from .svm_float import LossTrace, Model, TrainConfig, presentation_order, train

MAX_PRECISION = 40


@dataclass(frozen=True)
class PrecisionConfig:
    b_x: int
    b_f: int
    b_w: int | None = None

    def __post_init__(self):
        for name in ("b_x", "b_f", "b_w"):
            v = getattr(self, name)
            if v is None and name == "b_w":
                continue
            if int(v) != v or not (1 <= v <= MAX_PRECISION):
                raise ValueError(f"{name} must be an integer in [1, {MAX_PRECISION}], got {v}")

    @classmethod
    def parse(cls, text: str) -> "PrecisionConfig":
        """Parse ``"BX,BF"`` or ``"BX,BF,BW"``."""
        parts = [int(p) for p in text.split(",")]
        if len(parts) not in (2, 3):
            raise ValueError(f"expected BX,BF[,BW], got {text!r}")
        return cls(*parts)

    @property
    def delta_x(self) -> float:
        return math.ldexp(1.0, -(self.b_x - 1))

    @property
    def delta_f(self) -> float:
        return math.ldexp(1.0, -(self.b_f - 1))

    @property
    def lsb_w(self) -> float:
        if self.b_w is None:
            raise ValueError("b_w is not set")
        return math.ldexp(1.0, -(self.b_w - 1))

    def input_grid(self) -> QGrid:
        return QGrid.signed(self.b_x)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MismatchReport:
    p_m_hat: float
    p_e_fx: float
    p_fl: float
    trials: int
    seed: int
    n_pairs: int
    se_pm: float
    se_pe: float
    cross_term: bool = True


def _model_max_abs(m: Model) -> float:
    return float(max(np.max(np.abs(m.w), initial=0.0), abs(m.b)))


def coefficient_grid(m: Model, b_f: int) -> QGrid:
    return QGrid.with_headroom(b_f, _model_max_abs(m))


def quantize_model(m: Model, b_f: int) -> Model:
    """Round ``w`` and ``b`` to the nearest point of the B_F coefficient grid."""
    g = coefficient_grid(m, b_f)
    return Model(quantize_nearest(m.w, g), quantize_nearest(m.b, g))


def quantize_inputs(X, b_x: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if np.any(X < -1.0) or np.any(X > 1.0):
        raise ValueError("features must lie in [-1, 1]")
    return np.asarray(quantize_nearest(X, QGrid.signed(b_x)))


def _exact_decisions(mq: Model, Xq: np.ndarray, bits_needed: int) -> np.ndarray:
    """``Xq @ w + b`` with a single final rounding, so the sign is exact."""
    Xq = np.atleast_2d(Xq)
    if bits_needed <= 52:
        prods = Xq * mq.w  # exact: both factors are short dyadic numbers
        return np.array([math.fsum(list(row) + [mq.b]) for row in prods])
    wf = [Fraction(v) for v in mq.w]
    bf = Fraction(mq.b)
    out = []
    for row in Xq:
        acc = bf + sum((Fraction(v) * c for v, c in zip(row, wf)), Fraction(0))
        out.append(float(acc))
    return np.array(out)


def decision_fx(m: Model, X, pc: PrecisionConfig) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != m.n_dims:
        raise ValueError(f"dimension mismatch: model has N={m.n_dims}, input has {X.shape[1]}")
    Xq = quantize_inputs(X, pc.b_x)
    g = coefficient_grid(m, pc.b_f)
    mq = Model(quantize_nearest(m.w, g), quantize_nearest(m.b, g))
    return _exact_decisions(mq, Xq, pc.b_x + pc.b_f + g.int_bits + 1)


def predict_fx(m: Model, X, pc: PrecisionConfig) -> np.ndarray:
    return np.where(decision_fx(m, X, pc) >= 0.0, 1, -1)


def classify_fx(m: Model, x, pc: PrecisionConfig) -> int:
    """Label from the quantized classifier; a decision value of exactly 0 gives +1."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("classify_fx takes a single feature vector")
    return int(predict_fx(m, x[None, :], pc)[0])


def error_rate_fx(m: Model, data: Dataset, pc: PrecisionConfig) -> float:
    if data.size == 0:
        raise DataError("dataset is empty")
    return float(np.mean(predict_fx(m, data.X, pc) != data.y))


def mismatch_mc(m: Model, data: Dataset, pc: PrecisionConfig, trials: int = 1000, seed: int = 0,
                cross_term: bool = True, chunk: int = 64) -> MismatchReport:
    """Monte-Carlo mismatch rate under additive uniform quantization noise.

    Every (sample, trial) pair draws fresh ``q_x ~ U(+-dx/2)^N``,
    ``q_w ~ U(+-df/2)^N`` and ``q_b ~ U(+-df/2)`` and compares the label of
    ``(w + q_w).(x + q_x) + b + q_b`` with the float label.  With
    ``cross_term=False`` the second-order term ``q_w.q_x`` is left out.
    """
    if data.size == 0:
        raise DataError("dataset is empty")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    hx, hf = pc.delta_x / 2, pc.delta_f / 2
    w, b = m.w, m.b
    d_fl = m.decision(data.X)
    lab_fl = d_fl >= 0.0
    y_pos = data.y == 1
    mism = err = 0
    for start in range(0, data.size, chunk):
        Xc = data.X[start:start + chunk]
        k = Xc.shape[0]
        qx = rng.uniform(-hx, hx, size=(k, trials, m.n_dims))
        qw = rng.uniform(-hf, hf, size=(k, trials, m.n_dims))
        qb = rng.uniform(-hf, hf, size=(k, trials))
        xs = Xc[:, None, :]
        if cross_term:
            d_fx = np.einsum("ktn,ktn->kt", w + qw, xs + qx) + b + qb
        else:
            d_fx = d_fl[start:start + k, None] + np.einsum("ktn,ktn->kt", qw, np.broadcast_to(xs, qw.shape)) \
                + qx @ w + qb
        lab_fx = d_fx >= 0.0
        mism += int(np.count_nonzero(lab_fx != lab_fl[start:start + k, None]))
        err += int(np.count_nonzero(lab_fx != y_pos[start:start + k, None]))
    n = data.size * trials
    p_m = mism / n
    p_e = err / n
    return MismatchReport(
        p_m_hat=p_m, p_e_fx=p_e, p_fl=float(np.mean(lab_fl == y_pos)), trials=trials, seed=seed,
        n_pairs=n, se_pm=math.sqrt(p_m * (1 - p_m) / n), se_pe=math.sqrt(p_e * (1 - p_e) / n),
        cross_term=cross_term,
    )


def weight_grid(b_w: int, max_abs: float) -> QGrid:
    return QGrid.with_headroom(b_w, max_abs)


def train_fx(data: Dataset, cfg: TrainConfig, pc: PrecisionConfig, max_abs: float | None = None,
             check_grid: bool = False, return_update_model: bool = False):
    """Fixed-point SGD.

    Weights live on the B_W grid.  Each presentation quantizes ``x`` to B_X
    bits, tests the margin with the stored weights, forms
    ``(1 - gamma*lam) * w + gamma * y * x_q`` exactly and truncates the result
    back onto the B_W grid.  The loss trace is the float loss of the stored
    weights on the raw sample.  The returned model is the final stored model
    rounded to the B_F grid.

    ``max_abs`` sets the integer headroom of the weight grid; by default it is
    taken from a float run with the same config.
    """
    if pc.b_w is None:
        raise ValueError("train_fx needs b_w")
    if data.size == 0:
        raise DataError("dataset is empty")
    if max_abs is None:
        max_abs = _model_max_abs(train(data, cfg)[0])
    gw = weight_grid(pc.b_w, max_abs)
    Xq = quantize_inputs(data.X, pc.b_x)
    X, Y = data.X, data.y
    g, a, lam = cfg.gamma, cfg.attenuation, cfg.lam
    w = np.zeros(data.n_dims)
    b = 0.0
    raw = []
    for order in presentation_order(data.size, cfg):
        for i in order:
            x, xq, y = X[i], Xq[i], int(Y[i])
            raw.append(lam * (float(np.dot(w, w)) + b * b) + max(0.0, 1.0 - y * (float(np.dot(w, x)) + b)))
            if y * (float(np.dot(w, xq)) + b) <= 1.0:
                w = truncate_floor(a * w + (g * y) * xq, gw)
                b = truncate_floor(a * b + g * y, gw)
            else:
                w = truncate_floor(a * w, gw)
                b = truncate_floor(a * b, gw)
            if check_grid and not (gw.contains(w) and gw.contains(b)):
                raise AssertionError(f"weights left the B_W grid at presentation {len(raw)}")
    update_model = Model(w, b)
    model = quantize_model(update_model, pc.b_f)
    trace = LossTrace(raw, cfg.window)
    if return_update_model:
        return model, trace, update_model
    return model, trace


def effective_update(x_tilde: float, gamma_log2: int, b_w: int, w: float = 0.0,
                     b_x: int | None = None) -> float:
    """Realized increment ``floor_BW(w + gamma * x_tilde) - w`` for on-grid ``w``.

    ``x_tilde`` is the signed input ``y * x`` already on the B_X grid.  The
    increment does not depend on ``w`` as long as ``w`` is on the B_W grid and
    no saturation occurs.
    """
    if not (-1.0 <= x_tilde <= 1.0):
        raise ValueError(f"x_tilde={x_tilde} outside [-1, 1]")
    if b_x is not None:
        if not QGrid.signed(b_x).contains(x_tilde):
            raise ValueError(f"x_tilde={x_tilde} is not on the {b_x}-bit input grid")
    elif math.ldexp(x_tilde, MAX_PRECISION) != math.floor(math.ldexp(x_tilde, MAX_PRECISION)):
        raise ValueError(f"x_tilde={x_tilde} is not on any input grid up to {MAX_PRECISION} bits")
    gamma = math.ldexp(1.0, -gamma_log2)
    gw = QGrid.with_headroom(b_w, abs(w) + 2.0)
    if not gw.contains(w):
        raise ValueError(f"w={w} is not on the {b_w}-bit weight grid")
    return truncate_floor(w + gamma * x_tilde, gw) - w
