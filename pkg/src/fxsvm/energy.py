"""Energy and throughput of the direct-mapped SVM-SGD datapath.

Full-adder counts for the datapath are closed-form in the precisions and the
vector dimension; energy per operation combines a dynamic ``C V^2`` term with
a subthreshold leakage term that grows with the critical-path length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .svm_fixed import PrecisionConfig

# 45 nm full-adder characterization
C_FA = 2.5678e-15
BETA = 1000.0
ALPHA = 0.4
SUBTHRESHOLD_SLOPE = 0.065

V_LO, V_HI, V_STEP = 0.2, 1.0, 0.005

PUBLISHED_RATIO_16B = 5.3


@dataclass(frozen=True)
class ElectricalParams:
    c_fa: float = C_FA
    beta: float = BETA
    alpha: float = ALPHA
    s: float = SUBTHRESHOLD_SLOPE
    i_on: float | None = None

    def __post_init__(self):
        for name in ("c_fa", "alpha", "s"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        # beta == 0 is allowed to switch leakage off
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.i_on is not None and not self.i_on > 0:
            raise ValueError("i_on must be > 0")


@dataclass(frozen=True)
class ArchCounts:
    n_fa: float
    l_fa: float

    def __post_init__(self):
        if not (self.n_fa >= self.l_fa > 0):
            raise ValueError(f"need n_fa >= l_fa > 0, got n_fa={self.n_fa}, l_fa={self.l_fa}")

    def scaled(self, c: float) -> "ArchCounts":
        return ArchCounts(self.n_fa * c, self.l_fa)


@dataclass(frozen=True)
class EnergyReport:
    v_dd: float
    e_dynamic: float
    e_leakage: float
    f_max: float | None = None

    @property
    def e_total(self) -> float:
        return self.e_dynamic + self.e_leakage

    @property
    def leakage_fraction(self) -> float:
        return self.e_leakage / self.e_total

    def to_dict(self) -> dict:
        return {"v_dd": self.v_dd, "e_dynamic": self.e_dynamic, "e_leakage": self.e_leakage,
                "e_total": self.e_total, "f_max": self.f_max}


def arch_counts(n_dims: int, pc: PrecisionConfig, gamma_log2: int) -> ArchCounts:
    """Full-adder total and critical-path depth for the direct-mapped datapath.

    The constant 5/3 in the depth makes it non-integer; it is kept as is.
    """
    if pc.b_w is None:
        raise ValueError("arch_counts needs b_w")
    if n_dims < 1 or gamma_log2 < 0:
        raise ValueError("n_dims must be >= 1 and gamma_log2 >= 0")
    n = n_dims
    bxf = pc.b_x + pc.b_f
    depth_tree = math.ceil(math.log2(n)) if n > 1 else 0
    n_fa = n * (bxf + 1) + n * bxf + (n + 1) * (2 * pc.b_w + 2 * gamma_log2 + 1)
    l_fa = bxf + depth_tree * bxf + 5.0 / 3.0 + bxf + depth_tree + pc.b_w + gamma_log2
    return ArchCounts(float(n_fa), float(l_fa))


def energy_components(v_dd, counts: ArchCounts, ep: ElectricalParams):
    """Dynamic and leakage energy; ``v_dd`` may be a scalar or an array."""
    v = np.asarray(v_dd, dtype=np.float64)
    cv2 = counts.n_fa * ep.c_fa * v**2
    dyn = ep.alpha * cv2
    leak = ep.beta * counts.l_fa * cv2 * 10.0 ** (-v / ep.s)
    return dyn, leak


def f_max(v_dd: float, counts: ArchCounts, ep: ElectricalParams) -> float | None:
    if ep.i_on is None:
        return None
    return ep.i_on / (ep.beta * counts.l_fa * ep.c_fa * v_dd)


def energy_at(v_dd: float, counts: ArchCounts, ep: ElectricalParams = ElectricalParams()) -> EnergyReport:
    if not v_dd > 0:
        raise ValueError("v_dd must be > 0")
    dyn, leak = energy_components(v_dd, counts, ep)
    return EnergyReport(float(v_dd), float(dyn), float(leak), f_max(v_dd, counts, ep))


def voltage_grid(v_lo: float = V_LO, v_hi: float = V_HI, v_step: float = V_STEP) -> np.ndarray:
    if not (0 < v_lo < v_hi) or not v_step > 0:
        raise ValueError("need 0 < v_lo < v_hi and v_step > 0")
    n = int(math.floor((v_hi - v_lo) / v_step + 1e-9))
    # integer multiples keep grid points free of accumulated drift
    return np.round(v_lo + v_step * np.arange(n + 1), 12)


def meop(counts: ArchCounts, ep: ElectricalParams = ElectricalParams(), v_lo: float = V_LO,
         v_hi: float = V_HI, v_step: float = V_STEP):
    """Grid-scan minimum-energy supply voltage; ties resolve to the lowest voltage."""
    v = voltage_grid(v_lo, v_hi, v_step)
    dyn, leak = energy_components(v, counts, ep)
    i = int(np.argmin(dyn + leak))
    return float(v[i]), energy_at(float(v[i]), counts, ep)


def energy_ratio(config_a, config_b, ep: ElectricalParams = ElectricalParams(),
                 iso_voltage: float | None = None, **grid) -> float:
    """E(config_b) / E(config_a), each at its own MEOP unless ``iso_voltage`` is given.

    A config is ``(n_dims, PrecisionConfig, gamma_log2)``.
    """
    ca = arch_counts(*config_a)
    cb = arch_counts(*config_b)
    if iso_voltage is not None:
        return energy_at(iso_voltage, cb, ep).e_total / energy_at(iso_voltage, ca, ep).e_total
    return meop(cb, ep, **grid)[1].e_total / meop(ca, ep, **grid)[1].e_total
