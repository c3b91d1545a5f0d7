"""Uniform fixed-point grids, rounding/truncation and quantization noise.

Quantized values are kept as float64 numbers that sit exactly on a grid of
spacing ``2**-(bits-1)``.  For the bit budgets used here (<= 40 bits) every
grid value, and every sum of grid values scaled by powers of two, is exactly
representable, so the simulation stays bit-accurate without integer types.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_BITS = 60


@dataclass(frozen=True)
class QGrid:
    """Grid ``{k * step : lo <= k * step <= hi}`` with ``step = 2**-(bits-1)``."""

    bits: int
    lo: float = -1.0
    hi: float = 1.0

    def __post_init__(self):
        if not (1 <= self.bits <= MAX_BITS):
            raise ValueError(f"bits must be in [1, {MAX_BITS}], got {self.bits}")
        if self.lo > self.hi:
            raise ValueError(f"empty grid: lo={self.lo} > hi={self.hi}")
        for edge in (self.lo, self.hi):
            if not _is_multiple(edge, self.step):
                raise ValueError(f"clamp edge {edge} is not a multiple of step {self.step}")

    @property
    def step(self) -> float:
        return math.ldexp(1.0, -(self.bits - 1))

    @classmethod
    def signed(cls, bits: int, int_bits: int = 0) -> "QGrid":
        """Two's-complement range ``[-2**int_bits, 2**int_bits - step]``."""
        edge = math.ldexp(1.0, int_bits)
        return cls(bits, -edge, edge - math.ldexp(1.0, -(bits - 1)))

    @classmethod
    def with_headroom(cls, bits: int, max_abs: float) -> "QGrid":
        """Smallest signed grid whose range covers ``[-max_abs, max_abs]`` to within step/2."""
        half = math.ldexp(1.0, -bits)
        int_bits = max(0, math.ceil(math.log2(max(1.0, float(max_abs)))))
        while float(max_abs) > math.ldexp(1.0, int_bits) - half:
            int_bits += 1
        return cls.signed(bits, int_bits)

    @property
    def int_bits(self) -> int:
        return max(0, math.ceil(math.log2(max(1.0, -self.lo))))

    def points(self) -> np.ndarray:
        """All grid points in increasing order (small grids only)."""
        k_lo = round(self.lo / self.step)
        k_hi = round(self.hi / self.step)
        return np.arange(k_lo, k_hi + 1, dtype=np.float64) * self.step

    def index(self, v):
        """Integer grid index of on-grid value(s); raises if any value is off-grid."""
        k = np.asarray(v, dtype=np.float64) / self.step
        if not np.all(k == np.round(k)):
            raise ValueError("value is not on the grid")
        return k.astype(np.int64)

    def contains(self, v) -> bool:
        v = np.asarray(v, dtype=np.float64)
        k = v / self.step
        return bool(np.all((k == np.round(k)) & (v >= self.lo) & (v <= self.hi)))


def _is_multiple(v: float, step: float) -> bool:
    k = v / step
    return k == math.floor(k)


def quantize_nearest(v, g: QGrid):
    """Round to the nearest grid point after clamping; ties go to the even index."""
    clamped = np.clip(np.asarray(v, dtype=np.float64), g.lo, g.hi)
    # np.rint rounds half to even; dividing by a power of two is exact
    out = np.rint(clamped / g.step) * g.step
    return float(out) if out.ndim == 0 else out


def truncate_floor(v, g: QGrid):
    """Largest grid point <= clamp(v), i.e. two's-complement truncation."""
    clamped = np.clip(np.asarray(v, dtype=np.float64), g.lo, g.hi)
    out = np.floor(clamped / g.step) * g.step
    return float(out) if out.ndim == 0 else out


def sample_quant_noise(g: QGrid, count, seed=None, rng: np.random.Generator | None = None):
    """I.i.d. draws from U(-step/2, step/2).

    ``count`` may be an int or a shape tuple.  Pass either ``seed`` or an
    existing ``rng``; the same seed always reproduces the same draws.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    if isinstance(count, (int, np.integer)) and count < 1:
        raise ValueError("count must be >= 1")
    half = g.step / 2
    return rng.uniform(-half, half, size=count)
