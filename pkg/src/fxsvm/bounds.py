"""Closed-form precision bounds for the fixed-point SVM classifier and SGD updater.

Every bit-count bound returns a :class:`BitBound` carrying the real-valued
threshold and the integer bit count that satisfies it, or ``bits=None`` with
a reason when no precision can meet the requirement.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .datasets import Dataset, DataError
from .svm_fixed import PrecisionConfig
from .svm_float import Model

EPS_MARGIN = 1e-12


class BoundaryPointError(DataError):
    """Some samples sit on the decision boundary, so E[1/|w.x+b|^2] diverges."""

    def __init__(self, indices):
        self.indices = list(indices)
        shown = self.indices[:10]
        more = "" if len(self.indices) <= 10 else f" (+{len(self.indices) - 10} more)"
        super().__init__(f"samples on the decision boundary: {shown}{more}")


@dataclass(frozen=True)
class BitBound:
    bits: int | None
    threshold: float
    reason: str = ""

    @property
    def feasible(self) -> bool:
        return self.bits is not None

    def __str__(self):
        if self.feasible:
            return f"{self.bits} (threshold {self.threshold:.4f})"
        return f"Infeasible: {self.reason}"


@dataclass(frozen=True)
class DatasetStats:
    e1: float
    e2: float
    max_norm: float
    mean_norm: float
    n_dims: int

    def to_dict(self) -> dict:
        return {"e1": self.e1, "e2": self.e2, "max_norm": self.max_norm,
                "mean_norm": self.mean_norm, "n_dims": self.n_dims}


class PmBound(NamedTuple):
    raw: float
    capped: float


def dataset_stats(m: Model, data: Dataset, eps_margin: float = EPS_MARGIN) -> DatasetStats:
    if data.size == 0:
        raise DataError("dataset is empty")
    d = np.abs(m.decision(data.X))
    bad = np.flatnonzero(d < eps_margin)
    if bad.size:
        raise BoundaryPointError(bad.tolist())
    sq = np.einsum("ij,ij->i", data.X, data.X)
    norms = np.sqrt(sq)
    inv = 1.0 / d**2
    return DatasetStats(
        e1=float(np.mean(inv)),
        e2=float(np.mean((sq + 1.0) * inv)),
        max_norm=float(norms.max()),
        mean_norm=float(norms.mean()),
        n_dims=data.n_dims,
    )


def geometric_min_bx(n_dims: int, b_f: int, w_norm: float, x_norm: float) -> BitBound:
    """Smallest B_X keeping every point outside the margin on its side (single point norm)."""
    rn = math.sqrt(n_dims)
    qf = math.ldexp(1.0, -b_f)
    den = 1.0 - qf - rn * qf * x_norm
    if den <= 0:
        return BitBound(None, math.inf, f"1 - 2^-B_F - sqrt(N) 2^-B_F |x| = {den:.6g} <= 0; raise B_F")
    t = math.log2(rn * w_norm / den)
    return BitBound(max(1, math.floor(t) + 1), t)


def geometric_min_bx_dataset(stats: DatasetStats, b_f: int, w_norm: float) -> BitBound:
    return geometric_min_bx(stats.n_dims, b_f, w_norm, stats.max_norm)


def geometric_min_bf(n_dims: int, b_x: int, w_norm: float, x_norm: float) -> BitBound:
    """Smallest B_F with ``2^-B_F (1 + sqrt(N)|x|) < 1 - sqrt(N) 2^-B_X |w|``."""
    rn = math.sqrt(n_dims)
    rhs = 1.0 - rn * math.ldexp(1.0, -b_x) * w_norm
    if rhs <= 0:
        return BitBound(None, math.inf, f"1 - sqrt(N) 2^-B_X |w| = {rhs:.6g} <= 0; raise B_X")
    t = math.log2((1.0 + rn * x_norm) / rhs)
    return BitBound(max(1, math.floor(t) + 1), t)


def pm_bound_from_steps(delta_x: float, delta_f: float, w_norm: float, stats: DatasetStats) -> float:
    return (delta_x**2 * w_norm**2 * stats.e1 + delta_f**2 * stats.e2) / 24.0


def pm_upper_bound(pc: PrecisionConfig, m: Model, stats: DatasetStats) -> PmBound:
    """Chebyshev bound on the fixed/float mismatch probability, raw and capped at 1."""
    raw = pm_bound_from_steps(pc.delta_x, pc.delta_f, m.norm, stats)
    return PmBound(raw, min(raw, 1.0))


def min_bx_for_target(p_t: float, b_f: int, m: Model, stats: DatasetStats) -> BitBound:
    """Smallest B_X whose mismatch bound is at most ``p_t`` for the given B_F.

    Solving ``(dx^2 |w|^2 E1 + df^2 E2) / 24 <= p_t`` with ``dx = 2^-(B_X-1)``
    gives ``B_X >= 1 - log2((24 p_t - df^2 E2) / (|w|^2 E1)) / 2``.
    """
    if not (0.0 < p_t < 1.0):
        raise ValueError("p_t must be in (0, 1)")
    df = math.ldexp(1.0, -(b_f - 1))
    slack = 24.0 * p_t - df**2 * stats.e2
    if slack <= 0:
        return BitBound(None, math.inf, f"24 p_t - df^2 E2 = {slack:.6g} <= 0; B_F alone exceeds the target")
    denom = m.norm**2 * stats.e1
    if denom == 0:
        return BitBound(1, -math.inf)
    t = 1.0 - 0.5 * math.log2(slack / denom)
    return BitBound(max(1, math.ceil(t)), t)


def pe_upper_bound(p_fl: float, p_m: float) -> float:
    """Frechet bound on the fixed-point error from float detection and mismatch rates."""
    for name, p in (("p_fl", p_fl), ("p_m", p_m)):
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"{name} must be in [0, 1], got {p}")
    return 1.0 + min(p_fl, p_m) - max(p_fl, p_m)


def min_bw(b_x: int, gamma_log2: int) -> int:
    """Weight-update precision that represents every ``gamma * x`` step exactly."""
    if b_x < 1:
        raise ValueError("b_x must be >= 1")
    return b_x + gamma_log2


class Regime(enum.Enum):
    AT_OR_ABOVE_BOUND = "AtOrAboveBound"
    SUB_BOUND = "SubBound"
    QUARTER_TABLE = "QuarterTable"
    HALF_SIGN_SGD = "HalfSignSGD"
    DOUBLED_SIGN_SGD = "DoubledSignSGD"
    BELOW = "Below"

    def __str__(self):
        return self.value


def effective_input_bits(b_w: int, gamma_log2: int) -> int:
    """Input bits that survive in the update term: ``B_W + log2(gamma)``."""
    return b_w - gamma_log2


def regime_of(b_w: int, gamma_log2: int, b_x: int | None = None) -> Regime:
    """Classify the weight-update precision relative to the exact-update bound.

    Without ``b_x`` any value with three or more surviving input bits is
    reported as at-or-above the bound for inputs of that width.
    """
    bx1 = effective_input_bits(b_w, gamma_log2)
    if bx1 < 0:
        return Regime.BELOW
    if b_x is not None and bx1 >= b_x:
        return Regime.AT_OR_ABOVE_BOUND
    special = {0: Regime.DOUBLED_SIGN_SGD, 1: Regime.HALF_SIGN_SGD, 2: Regime.QUARTER_TABLE}
    if bx1 in special:
        return special[bx1]
    return Regime.AT_OR_ABOVE_BOUND if b_x is None else Regime.SUB_BOUND
