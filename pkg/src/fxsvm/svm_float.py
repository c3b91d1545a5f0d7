"""Floating-point soft-margin linear SVM trained by online SGD."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .datasets import Dataset, DataError

DEFAULT_WINDOW = 50


@dataclass
class Model:
    w: np.ndarray
    b: float = 0.0

    def __post_init__(self):
        self.w = np.array(self.w, dtype=np.float64).reshape(-1)
        self.b = float(self.b)

    @property
    def n_dims(self) -> int:
        return self.w.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.w))

    @classmethod
    def zeros(cls, n_dims: int) -> "Model":
        return cls(np.zeros(n_dims), 0.0)

    def copy(self) -> "Model":
        return Model(self.w.copy(), self.b)

    def scaled(self, c: float) -> "Model":
        return Model(c * self.w, c * self.b)

    def decision(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.n_dims:
            raise ValueError(f"dimension mismatch: model has N={self.n_dims}, input has {X.shape[-1]}")
        return X @ self.w + self.b

    def to_dict(self) -> dict:
        return {"w": [float(v) for v in self.w], "b": self.b, "n_dims": self.n_dims}

    @classmethod
    def from_dict(cls, d: dict) -> "Model":
        m = cls(d["w"], d["b"])
        if "n_dims" in d and int(d["n_dims"]) != m.n_dims:
            raise ValueError(f"n_dims={d['n_dims']} does not match len(w)={m.n_dims}")
        return m

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Model":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class TrainConfig:
    """SGD settings; the step size is always ``gamma = 2**-gamma_log2``."""

    gamma_log2: int = 5
    lam: float = 1.0
    epochs: int = 10
    seed: int = 0
    shuffle: bool = True
    window: int = DEFAULT_WINDOW

    def __post_init__(self):
        if int(self.gamma_log2) != self.gamma_log2 or self.gamma_log2 < 0:
            raise ValueError(f"gamma_log2 must be a nonnegative integer, got {self.gamma_log2}")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.gamma * self.lam >= 1:
            raise ValueError(f"gamma*lambda = {self.gamma * self.lam} must be < 1")

    @property
    def gamma(self) -> float:
        return math.ldexp(1.0, -self.gamma_log2)

    @property
    def attenuation(self) -> float:
        return 1.0 - self.gamma * self.lam

    def to_dict(self) -> dict:
        return {"gamma_log2": self.gamma_log2, "lambda": self.lam, "epochs": self.epochs,
                "seed": self.seed, "shuffle": self.shuffle, "window": self.window}


@dataclass
class LossTrace:
    """Per-presentation loss values and their trailing-window average."""

    raw: np.ndarray
    window: int = DEFAULT_WINDOW
    values: np.ndarray = field(init=False)

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=np.float64)
        c = np.concatenate([[0.0], np.cumsum(self.raw)])
        n = np.arange(1, self.raw.size + 1)
        start = np.maximum(n - self.window, 0)
        self.values = (c[n] - c[start]) / (n - start)

    def __len__(self):
        return self.raw.size

    def final(self) -> float:
        return float(self.values[-1])


def _check_dims(m: Model, x):
    if np.shape(x)[-1] != m.n_dims:
        raise ValueError(f"dimension mismatch: model has N={m.n_dims}, sample has {np.shape(x)[-1]}")


def classify(m: Model, x) -> int:
    """+1 if ``w.x + b >= 0`` else -1."""
    _check_dims(m, x)
    return 1 if float(np.dot(m.w, x)) + m.b >= 0.0 else -1


def predict(m: Model, X) -> np.ndarray:
    return np.where(m.decision(X) >= 0.0, 1, -1)


def loss(m: Model, sample, lam: float) -> float:
    """Regularized hinge loss ``lam*(|w|^2 + b^2) + max(0, 1 - y(w.x + b))``."""
    x, y = sample
    _check_dims(m, x)
    margin = y * (float(np.dot(m.w, x)) + m.b)
    return lam * (float(np.dot(m.w, m.w)) + m.b * m.b) + max(0.0, 1.0 - margin)


def sgd_step(m: Model, sample, cfg: TrainConfig) -> Model:
    x, y = sample
    _check_dims(m, x)
    g = cfg.gamma
    a = cfg.attenuation
    if y * (float(np.dot(m.w, x)) + m.b) <= 1.0:
        return Model(a * m.w + g * y * np.asarray(x, dtype=np.float64), a * m.b + g * y)
    return Model(a * m.w, a * m.b)


def batch_gd_step(m: Model, data: Dataset, cfg: TrainConfig) -> Model:
    """One full-batch step using the same per-sample subgradient as :func:`sgd_step`.

    Test oracle only.
    """
    if data.size == 0:
        raise DataError("dataset is empty")
    _check_dims(m, data.X[0])
    active = data.y * m.decision(data.X) <= 1.0
    gw = (data.y[active, None] * data.X[active]).sum(axis=0) / data.size
    gb = data.y[active].sum() / data.size
    a = cfg.attenuation
    return Model(a * m.w + cfg.gamma * gw, a * m.b + cfg.gamma * gb)


def presentation_order(size: int, cfg: TrainConfig):
    """Yield the sample index sequence, one array per epoch."""
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.epochs):
        yield rng.permutation(size) if cfg.shuffle else np.arange(size)


def train(data: Dataset, cfg: TrainConfig, init: Model | None = None):
    """Online SGD from ``w = 0, b = 0``.

    The loss of each presented sample is recorded before the update is applied.
    Returns ``(model, LossTrace)``.
    """
    if data.size == 0:
        raise DataError("dataset is empty")
    X, Y = data.X, data.y
    w = np.zeros(data.n_dims) if init is None else init.w.copy()
    b = 0.0 if init is None else init.b
    g, a, lam = cfg.gamma, cfg.attenuation, cfg.lam
    raw = []
    for order in presentation_order(data.size, cfg):
        for i in order:
            x, y = X[i], int(Y[i])
            margin = y * (float(np.dot(w, x)) + b)
            raw.append(lam * (float(np.dot(w, w)) + b * b) + max(0.0, 1.0 - margin))
            if margin <= 1.0:
                w = a * w + (g * y) * x
                b = a * b + g * y
            else:
                w = a * w
                b = a * b
    return Model(w, b), LossTrace(raw, cfg.window)


def error_rate(m: Model, data: Dataset) -> float:
    if data.size == 0:
        raise DataError("dataset is empty")
    return float(np.mean(predict(m, data.X) != data.y))
