"""Precision sweeps, convergence studies and energy studies with CSV/JSON output.

Each sweep cell gets its own seed derived from ``(base_seed, cell_key)`` and
rows are emitted in cell-key order, so running cells in parallel never
changes the bytes written.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import bounds as bnd
from . import energy as en
from .datasets import Dataset, split
from .svm_fixed import PrecisionConfig, error_rate_fx, mismatch_mc, predict_fx, train_fx
from .svm_float import Model, TrainConfig, error_rate, predict, train

DEFAULT_TRIALS = 1000
THREADS_ENV = "FXSVM_THREADS"


def derive_seed(base_seed: int, *key) -> int:
    digest = hashlib.sha256(repr((int(base_seed),) + tuple(key)).encode()).digest()
    return int.from_bytes(digest[:4], "little")


def max_workers(requested: int | None = None) -> int:
    n = requested or os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def version_string() -> str:
    try:
        from importlib.metadata import version
        base = version("artifact")
    except Exception:
        base = "0+unknown"
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{base}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return base


def _map_cells(fn, cells, workers):
    if workers <= 1 or len(cells) <= 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------- accuracy sweep

@dataclass
class SweepRow:
    b_x: int
    b_f: int
    b_w: int | None
    p_e_fx: float        # deterministic fixed-point error on the evaluation split
    p_m_fx: float        # deterministic fixed/float disagreement on the evaluation split
    p_m_hat: float       # Monte-Carlo mismatch on the statistics split
    se_pm: float
    p_e_mc: float
    se_pe: float
    p_fl: float
    pm_bound: float      # raw Chebyshev bound
    pm_bound_capped: float
    pe_bound: float
    geometric_feasible: bool       # B_X above the bound using the mean feature norm
    geometric_feasible_max: bool   # B_X above the bound using the max feature norm
    seed: int


@dataclass
class SweepResult:
    rows: list
    meta: dict = field(default_factory=dict)

    def csv_text(self) -> str:
        header = list(SweepRow.__dataclass_fields__)
        return _csv_text(header, [[getattr(r, h) for h in header] for r in self.rows])

    def to_dict(self) -> dict:
        return {"meta": self.meta, "rows": [asdict(r) for r in self.rows]}

    def knee(self, target: float) -> int | None:
        """Smallest swept B_X whose deterministic fixed-point error is <= target."""
        for r in sorted(self.rows, key=lambda r: r.b_x):
            if r.p_e_fx <= target:
                return r.b_x
        return None


def _pick_split(name, train_set, test_set):
    if name == "train":
        return train_set
    if name == "test":
        return test_set
    if name == "all":
        return Dataset(np.vstack([train_set.X, test_set.X]), np.concatenate([train_set.y, test_set.y]),
                       train_set.provenance)
    raise ValueError(f"unknown split {name!r}")


def run_accuracy_sweep(data: Dataset, cfg: TrainConfig, b_f: int, b_x_range=range(1, 11),
                       trials: int = DEFAULT_TRIALS, seed: int = 0, train_fraction: float = 0.7,
                       split_seed: int = 0, stats_split: str = "train", eval_split: str = "test",
                       model: Model | None = None, workers: int | None = 1) -> SweepResult:
    """Fixed-point classifier accuracy and bound overlays for each B_X at fixed B_F.

    The float model is trained once on the train split (unless ``model`` is
    given).  Per B_X the row holds the deterministic fixed-point error and
    disagreement on ``eval_split``, the Monte-Carlo mismatch estimate and the
    Chebyshev and Frechet bounds on ``stats_split``, and the geometric
    feasibility markers.
    """
    t0 = time.perf_counter()
    train_set, test_set = split(data, train_fraction, split_seed)
    if model is None:
        model, _ = train(train_set, cfg)
    stats_data = _pick_split(stats_split, train_set, test_set)
    eval_data = _pick_split(eval_split, train_set, test_set)
    stats = bnd.dataset_stats(model, stats_data)
    w_norm = model.norm
    gb_mean = bnd.geometric_min_bx(data.n_dims, b_f, w_norm, stats.mean_norm)
    gb_max = bnd.geometric_min_bx_dataset(stats, b_f, w_norm)
    float_labels = predict(model, eval_data.X)

    def cell(b_x):
        pc = PrecisionConfig(b_x, b_f)
        cell_seed = derive_seed(seed, "accuracy", b_f, b_x)
        fx_labels = predict_fx(model, eval_data.X, pc)
        rep = mismatch_mc(model, stats_data, pc, trials, cell_seed)
        pmb = bnd.pm_upper_bound(pc, model, stats)
        return SweepRow(
            b_x=b_x, b_f=b_f, b_w=None,
            p_e_fx=float(np.mean(fx_labels != eval_data.y)),
            p_m_fx=float(np.mean(fx_labels != float_labels)),
            p_m_hat=rep.p_m_hat, se_pm=rep.se_pm, p_e_mc=rep.p_e_fx, se_pe=rep.se_pe, p_fl=rep.p_fl,
            pm_bound=pmb.raw, pm_bound_capped=pmb.capped,
            pe_bound=bnd.pe_upper_bound(rep.p_fl, rep.p_m_hat),
            geometric_feasible=gb_mean.feasible and b_x >= gb_mean.bits,
            geometric_feasible_max=gb_max.feasible and b_x >= gb_max.bits,
            seed=cell_seed,
        )

    rows = _map_cells(cell, sorted(set(int(b) for b in b_x_range)), max_workers(workers))
    meta = {
        "experiment": "accuracy_sweep", "dataset": data.provenance, "n_dims": data.n_dims,
        "train_config": cfg.to_dict(), "b_f": b_f, "trials": trials, "seed": seed,
        "split": {"train_fraction": train_fraction, "split_seed": split_seed,
                  "train_size": train_set.size, "test_size": test_set.size,
                  "stats_split": stats_split, "eval_split": eval_split},
        "model": model.to_dict(), "w_norm": w_norm, "stats": stats.to_dict(),
        "float_error": float(np.mean(float_labels != eval_data.y)),
        "geometric_bound_mean_norm": {"bits": gb_mean.bits, "threshold": gb_mean.threshold},
        "geometric_bound_max_norm": {"bits": gb_max.bits, "threshold": gb_max.threshold},
        "min_bx_for_pm_0.01": bnd.min_bx_for_target(0.01, b_f, model, stats).bits,
        "version": version_string(),
    }
    result = SweepResult(rows, meta)
    result.wall_clock_s = time.perf_counter() - t0
    return result


# ---------------------------------------------------------------- convergence study

@dataclass
class ConvergenceResult:
    float_trace: np.ndarray
    traces: dict                 # b_w -> windowed loss trace
    regimes: dict                # b_w -> Regime
    test_errors: dict            # "float" / b_w -> fixed-point test error
    meta: dict = field(default_factory=dict)

    def final(self, key) -> float:
        trace = self.float_trace if key == "float" else self.traces[key]
        return float(trace[-1])

    def early(self, key, n: int | None = None) -> float:
        """Mean windowed loss over the first ``n`` presentations (default one window)."""
        trace = self.float_trace if key == "float" else self.traces[key]
        n = n or self.meta.get("window", 50)
        return float(np.mean(trace[:n]))

    def csv_text(self) -> str:
        keys = sorted(self.traces, reverse=True)
        header = ["presentation", "float"] + [f"bw{k}" for k in keys]
        cols = [self.float_trace] + [self.traces[k] for k in keys]
        rows = [[i + 1] + [float(c[i]) for c in cols] for i in range(len(self.float_trace))]
        return _csv_text(header, rows)

    def to_dict(self) -> dict:
        return {
            "meta": self.meta,
            "regimes": {str(k): str(v) for k, v in self.regimes.items()},
            "test_errors": {str(k): v for k, v in self.test_errors.items()},
            "final_loss": {"float": self.final("float"), **{str(k): self.final(k) for k in self.traces}},
        }


def run_convergence_study(data: Dataset, cfg: TrainConfig, pc_base: PrecisionConfig, b_w_list,
                          train_fraction: float = 0.7, split_seed: int = 0,
                          workers: int | None = 1) -> ConvergenceResult:
    """Float and fixed-point training runs that share one presentation order."""
    b_w_list = list(b_w_list)
    if not b_w_list:
        raise ValueError("b_w_list must be nonempty")
    t0 = time.perf_counter()
    train_set, test_set = split(data, train_fraction, split_seed)
    fmodel, ftrace = train(train_set, cfg)
    max_abs = float(max(np.max(np.abs(fmodel.w)), abs(fmodel.b)))

    def cell(b_w):
        pc = PrecisionConfig(pc_base.b_x, pc_base.b_f, b_w)
        m, tr = train_fx(train_set, cfg, pc, max_abs=max_abs)
        return b_w, tr.values, error_rate_fx(m, test_set, pc)

    out = _map_cells(cell, sorted(set(b_w_list), reverse=True), max_workers(workers))
    traces = {bw: t for bw, t, _ in out}
    errs = {"float": error_rate(fmodel, test_set), **{bw: e for bw, _, e in out}}
    regimes = {bw: bnd.regime_of(bw, cfg.gamma_log2, pc_base.b_x) for bw in traces}
    meta = {
        "experiment": "convergence", "dataset": data.provenance, "n_dims": data.n_dims,
        "train_config": cfg.to_dict(), "window": cfg.window, "b_x": pc_base.b_x, "b_f": pc_base.b_f,
        "b_w_list": sorted(traces, reverse=True), "min_bw": bnd.min_bw(pc_base.b_x, cfg.gamma_log2),
        "split": {"train_fraction": train_fraction, "split_seed": split_seed,
                  "train_size": train_set.size, "test_size": test_set.size},
        "weight_headroom_from": max_abs, "version": version_string(),
    }
    result = ConvergenceResult(ftrace.values, traces, regimes, errs, meta)
    result.wall_clock_s = time.perf_counter() - t0
    return result


# ---------------------------------------------------------------- energy study

@dataclass
class EnergyRow:
    b_x: int
    b_f: int
    b_w: int
    n_fa: float
    l_fa: float
    v_star: float
    e_meop: float
    e_dynamic: float
    e_leakage: float
    ratio_vs_first: float


@dataclass
class EnergyStudy:
    rows: list
    curve: list      # (v, e_dynamic, e_leakage, e_total) for the first config
    meta: dict = field(default_factory=dict)

    def csv_text(self) -> str:
        header = list(EnergyRow.__dataclass_fields__)
        return _csv_text(header, [[getattr(r, h) for h in header] for r in self.rows])

    def curve_csv_text(self) -> str:
        return _csv_text(["v_dd", "e_dynamic", "e_leakage", "e_total"], self.curve)

    def to_dict(self) -> dict:
        return {"meta": self.meta, "rows": [asdict(r) for r in self.rows]}


FIG4_CONFIGS = (PrecisionConfig(5, 6, 10), PrecisionConfig(7, 8, 12), PrecisionConfig(16, 16, 16))


def run_energy_study(n_dims: int = 9, configs=FIG4_CONFIGS, gamma_log2: int = 5,
                     ep: en.ElectricalParams = en.ElectricalParams(),
                     v_grid=(en.V_LO, en.V_HI, en.V_STEP)) -> EnergyStudy:
    """MEOP of each precision assignment and its energy relative to the first one."""
    configs = list(configs)
    if not configs:
        raise ValueError("configs must be nonempty")
    v_lo, v_hi, v_step = v_grid
    rows = []
    for pc in configs:
        counts = en.arch_counts(n_dims, pc, gamma_log2)
        v_star, rep = en.meop(counts, ep, v_lo, v_hi, v_step)
        rows.append(EnergyRow(pc.b_x, pc.b_f, pc.b_w, counts.n_fa, counts.l_fa, v_star, rep.e_total,
                              rep.e_dynamic, rep.e_leakage, 0.0))
    for r in rows:
        r.ratio_vs_first = r.e_meop / rows[0].e_meop
    first = en.arch_counts(n_dims, configs[0], gamma_log2)
    v = en.voltage_grid(v_lo, v_hi, v_step)
    dyn, leak = en.energy_components(v, first, ep)
    curve = [(float(a), float(b), float(c), float(b + c)) for a, b, c in zip(v, dyn, leak)]
    meta = {
        "experiment": "energy", "n_dims": n_dims, "gamma_log2": gamma_log2,
        "electrical": asdict(ep), "v_grid": list(v_grid),
        "ratio_last_vs_first_computed": rows[-1].ratio_vs_first,
        "ratio_16bit_published": en.PUBLISHED_RATIO_16B,
        "version": version_string(),
    }
    return EnergyStudy(rows, curve, meta)


# ---------------------------------------------------------------- output

def write_outputs(result, out_dir, experiment: str, dataset: str, timestamp: str) -> list:
    """Write ``<experiment>_<dataset>_<timestamp>.{csv,json}`` and return the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{experiment}_{dataset}_{timestamp}"
    paths = []
    csv_path = out_dir / f"{stem}.csv"
    csv_path.write_text(result.csv_text())
    paths.append(csv_path)
    if isinstance(result, EnergyStudy):
        curve_path = out_dir / f"{stem}_curve.csv"
        curve_path.write_text(result.curve_csv_text())
        paths.append(curve_path)
    json_path = out_dir / f"{stem}.json"
    json_path.write_text(json.dumps(_jsonable(result.to_dict()), indent=2, sort_keys=True) + "\n")
    paths.append(json_path)
    return paths
