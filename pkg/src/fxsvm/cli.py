"""Command-line entry point: ``fxsvm {train,bounds,energy,reproduce,replay}``.

Exit codes: 0 success, 1 internal failure, 2 usage error, 3 input-data error.
Every run writes ``manifest_<command>_<timestamp>.json`` next to its outputs;
``fxsvm replay`` reruns a manifest and regenerates the same files.
"""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import bounds as bnd
from . import energy as en
from . import experiments as ex
from .datasets import DataError, generate_synthetic, load_csv, load_uci_breast_cancer, split
from .svm_fixed import PrecisionConfig, error_rate_fx, train_fx
from .svm_float import Model, TrainConfig, error_rate, train

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _precision(text):
    try:
        return PrecisionConfig.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _add_data_flags(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--uci", nargs="?", const="", metavar="PATH",
                   help="UCI breast-cancer (Original) file; bundled copy if PATH is omitted")
    g.add_argument("--synthetic", nargs=3, type=int, metavar=("N", "M", "SEED"))
    g.add_argument("--csv", metavar="PATH", help="generic CSV: label first, features in [-1, 1]")
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--split-seed", type=int, default=0)


def _add_train_flags(p):
    p.add_argument("--gamma-log2", type=int, default=5, help="step size gamma = 2**-K")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window", type=int, default=50)
    p.add_argument("--no-shuffle", action="store_true")


def _add_out_flags(p):
    p.add_argument("--out", default="fxsvm_out", help="output directory")
    p.add_argument("--timestamp", default=None, help="tag used in output file names (default: now, UTC)")


def _load_data(args):
    inputs = {}
    if args.uci is not None:
        path = args.uci or None
        data = load_uci_breast_cancer(path)
        if path:
            inputs[path] = _sha256(path)
        tag = "uci"
    elif args.synthetic is not None:
        n, m, seed = args.synthetic
        data = generate_synthetic(n, m, seed=seed)
        tag = "synthetic"
    else:
        data = load_csv(args.csv)
        inputs[args.csv] = _sha256(args.csv)
        tag = Path(args.csv).stem
    return data, tag, inputs


def _train_config(args) -> TrainConfig:
    try:
        return TrainConfig(args.gamma_log2, args.lam, args.epochs, args.seed, not args.no_shuffle, args.window)
    except ValueError as e:
        raise UsageError(str(e))


def _print_table(rows, out=None):
    out = out or sys.stdout
    width = max(len(str(k)) for k, _ in rows)
    for k, v in rows:
        print(f"{str(k):<{width}}  {v}", file=out)


# ---------------------------------------------------------------- subcommands

def cmd_train(args, run):
    cfg = _train_config(args)
    data, tag, inputs = _load_data(args)
    run["inputs"].update(inputs)
    train_set, test_set = split(data, args.train_fraction, args.split_seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.precision is None:
        model, trace = train(train_set, cfg)
        test_err = error_rate(model, test_set)
    else:
        pc = args.precision
        if pc.b_w is None:
            raise UsageError("--precision needs BX,BF,BW for training")
        model, trace = train_fx(train_set, cfg, pc)
        test_err = error_rate_fx(model, test_set, pc)
        regime = bnd.regime_of(pc.b_w, cfg.gamma_log2, pc.b_x)
        run["regime"] = str(regime)
        run["min_bw"] = bnd.min_bw(pc.b_x, cfg.gamma_log2)
    stem = f"train_{tag}_{run['timestamp']}"
    model_path = out / f"{stem}_model.json"
    model_path.write_text(json.dumps(model.to_dict(), indent=2) + "\n")
    trace_path = out / f"{stem}_trace.csv"
    with trace_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["presentation", "loss", "windowed_loss"])
        for i, (a, b) in enumerate(zip(trace.raw, trace.values), start=1):
            w.writerow([i, repr(float(a)), repr(float(b))])
    run["outputs"] += [str(model_path), str(trace_path)]
    rows = [("dataset", data.provenance), ("train/test", f"{train_set.size}/{test_set.size}"),
            ("|w|", f"{model.norm:.6f}"), ("b", f"{model.b:.6f}"),
            ("final windowed loss", f"{trace.final():.6f}"), ("test error", f"{test_err:.4f}")]
    if "regime" in run:
        rows += [("regime", run["regime"]), ("min B_W (exact update)", run["min_bw"])]
    _print_table(rows)
    return EXIT_OK


def cmd_bounds(args, run):
    data, tag, inputs = _load_data(args)
    run["inputs"].update(inputs)
    model_path = Path(args.model)
    if not model_path.is_file():
        raise FileNotFoundError(f"no such file: {model_path}")
    try:
        model = Model.from_json(model_path.read_text())
    except (ValueError, KeyError) as e:
        raise DataError(f"{model_path}: invalid model JSON ({e})")
    run["inputs"][str(model_path)] = _sha256(model_path)
    if model.n_dims != data.n_dims:
        raise DataError(f"model has N={model.n_dims} but dataset has N={data.n_dims}")
    train_set, test_set = split(data, args.train_fraction, args.split_seed)
    stats_data = ex._pick_split(args.stats_split, train_set, test_set)
    stats = bnd.dataset_stats(model, stats_data)
    b_f, b_x = args.bf, args.bx
    n = data.n_dims
    res = {
        "stats": stats.to_dict(), "w_norm": model.norm, "b_f": b_f, "b_x": b_x, "gamma_log2": args.gamma_log2,
        "geometric_min_bx_mean_norm": bnd.geometric_min_bx(n, b_f, model.norm, stats.mean_norm),
        "geometric_min_bx_max_norm": bnd.geometric_min_bx_dataset(stats, b_f, model.norm),
        "geometric_min_bf_mean_norm": bnd.geometric_min_bf(n, b_x, model.norm, stats.mean_norm),
        "pm_upper_bound": bnd.pm_upper_bound(PrecisionConfig(b_x, b_f), model, stats)._asdict(),
        "min_bw": bnd.min_bw(b_x, args.gamma_log2),
    }
    if args.target_pm is not None:
        res["min_bx_for_target_pm"] = bnd.min_bx_for_target(args.target_pm, b_f, model, stats)
        res["target_pm"] = args.target_pm
    p_fl = 1.0 - error_rate(model, stats_data)
    res["p_fl"] = p_fl
    res["pe_upper_bound"] = bnd.pe_upper_bound(p_fl, res["pm_upper_bound"]["capped"])

    def show(v):
        return str(v) if isinstance(v, bnd.BitBound) else v

    table = [("E1", f"{stats.e1:.6g}"), ("E2", f"{stats.e2:.6g}"), ("|w|", f"{model.norm:.6g}"),
             ("mean |x| / max |x|", f"{stats.mean_norm:.4f} / {stats.max_norm:.4f}"),
             (f"geometric min B_X (mean |x|, B_F={b_f})", show(res["geometric_min_bx_mean_norm"])),
             (f"geometric min B_X (max |x|, B_F={b_f})", show(res["geometric_min_bx_max_norm"])),
             (f"geometric min B_F (mean |x|, B_X={b_x})", show(res["geometric_min_bf_mean_norm"])),
             (f"p_m bound (B_X={b_x}, B_F={b_f})", f"{res['pm_upper_bound']['raw']:.6g}"),
             ("p_e bound", f"{res['pe_upper_bound']:.6g}")]
    if args.target_pm is not None:
        table.append((f"min B_X for p_m <= {args.target_pm}", show(res["min_bx_for_target_pm"])))
    table.append((f"min_bw (B_X={b_x}, gamma=2^-{args.gamma_log2})", res["min_bw"]))
    _print_table(table)

    def enc(v):
        if isinstance(v, bnd.BitBound):
            return {"bits": v.bits, "threshold": v.threshold if np.isfinite(v.threshold) else str(v.threshold),
                    "feasible": v.feasible, "reason": v.reason}
        return v

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"bounds_{tag}_{run['timestamp']}.json"
    path.write_text(json.dumps({k: enc(v) for k, v in res.items()}, indent=2, sort_keys=True) + "\n")
    run["outputs"].append(str(path))
    return EXIT_OK


def _electrical(args) -> en.ElectricalParams:
    try:
        return en.ElectricalParams(args.c_fa, args.beta, args.alpha, args.s, args.i_on)
    except ValueError as e:
        raise UsageError(str(e))


def _add_electrical_flags(p):
    p.add_argument("--c-fa", type=float, default=en.C_FA)
    p.add_argument("--beta", type=float, default=en.BETA)
    p.add_argument("--alpha", type=float, default=en.ALPHA)
    p.add_argument("--s", type=float, default=en.SUBTHRESHOLD_SLOPE)
    p.add_argument("--i-on", type=float, default=None, help="ON current in A; enables f_max")
    p.add_argument("--v-grid", type=float, nargs=3, default=[en.V_LO, en.V_HI, en.V_STEP],
                   metavar=("LO", "HI", "STEP"))


def cmd_energy(args, run):
    pc = args.precision
    if pc.b_w is None:
        raise UsageError("--precision needs BX,BF,BW")
    ep = _electrical(args)
    counts = en.arch_counts(args.n, pc, args.gamma_log2)
    v_star, at_meop = en.meop(counts, ep, *args.v_grid)
    res = {"n_dims": args.n, "precision": pc.to_dict(), "gamma_log2": args.gamma_log2,
           "n_fa": counts.n_fa, "l_fa": counts.l_fa, "meop": {"v_star": v_star, **at_meop.to_dict()}}
    table = [("N_fa", f"{counts.n_fa:g}"), ("L_fa", f"{counts.l_fa:.4f}"),
             ("MEOP V_dd", f"{v_star:.3f} V"), ("E at MEOP", f"{at_meop.e_total:.4e} J")]
    if args.vdd is not None:
        rep = en.energy_at(args.vdd, counts, ep)
        res["at_vdd"] = rep.to_dict()
        table += [(f"E_dynamic @ {args.vdd} V", f"{rep.e_dynamic:.4e} J"),
                  (f"E_leakage @ {args.vdd} V", f"{rep.e_leakage:.4e} J"),
                  (f"E_total @ {args.vdd} V", f"{rep.e_total:.4e} J")]
        if rep.f_max is not None:
            table.append(("f_max", f"{rep.f_max:.4e} Hz"))
    _print_table(table)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"energy_N{args.n}_{run['timestamp']}.json"
    path.write_text(json.dumps(res, indent=2, sort_keys=True) + "\n")
    run["outputs"].append(str(path))
    return EXIT_OK


def cmd_reproduce(args, run):
    out = Path(args.out)
    ts = run["timestamp"]
    cfg = TrainConfig(5, 1.0, args.epochs, args.seed, True, 50)
    if args.figure == "fig4":
        study = ex.run_energy_study(ep=_electrical(args), v_grid=tuple(args.v_grid))
        paths = ex.write_outputs(study, out, "fig4", "uci", ts)
        rows = [(f"B_X={r.b_x} B_F={r.b_f} B_W={r.b_w}",
                 f"V*={r.v_star:.3f} V  E={r.e_meop:.4e} J  ratio={r.ratio_vs_first:.3f}") for r in study.rows]
        rows.append(("16-bit / minimum ratio", f"computed {study.rows[-1].ratio_vs_first:.2f}x, "
                                               f"published {en.PUBLISHED_RATIO_16B}x"))
        _print_table(rows)
    else:
        if args.figure == "fig2":
            data, tag = load_uci_breast_cancer(args.uci), "uci"
        else:
            n, m, s = args.synthetic_shape
            data, tag = generate_synthetic(n, m, seed=s), "synthetic"
        workers = ex.max_workers(args.workers)
        sweep = ex.run_accuracy_sweep(data, cfg, 6, range(1, 11), args.trials, args.seed,
                                      args.train_fraction, args.split_seed, workers=workers)
        conv = ex.run_convergence_study(data, cfg, PrecisionConfig(6, 6), [11, 10, 7, 6, 5],
                                        args.train_fraction, args.split_seed, workers=workers)
        paths = ex.write_outputs(sweep, out, f"{args.figure}a", tag, ts)
        paths += ex.write_outputs(conv, out, f"{args.figure}b", tag, ts)
        rows = [(f"B_X={r.b_x}", f"p_e={r.p_e_fx:.4f}  p_m(MC)={r.p_m_hat:.4f}  UB={r.pm_bound_capped:.4f}  "
                                 f"GB={'y' if r.geometric_feasible else 'n'}") for r in sweep.rows]
        rows.append(("knee (p_e <= 0.06)", sweep.knee(0.06)))
        rows += [(f"B_W={bw} ({conv.regimes[bw]})", f"final loss {conv.final(bw):.4f}") for bw in conv.traces]
        rows.append(("float", f"final loss {conv.final('float'):.4f}"))
        _print_table(rows)
    run["outputs"] += [str(p) for p in paths]
    return EXIT_OK


def cmd_replay(args, run):
    manifest = json.loads(Path(args.manifest).read_text())
    argv = list(manifest["argv"])
    if args.out:
        argv = _replace_flag(argv, "--out", args.out)
    argv = _replace_flag(argv, "--timestamp", manifest["timestamp"])
    run["replayed"] = str(args.manifest)
    return main(argv)


def _replace_flag(argv, flag, value):
    out, skip = [], False
    for i, a in enumerate(argv):
        if skip:
            skip = False
            continue
        if a == flag:
            skip = True
            continue
        if a.startswith(flag + "="):
            continue
        out.append(a)
    return out + [flag, value]


# ---------------------------------------------------------------- parser / main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fxsvm", description="Fixed-point SVM-SGD precision and energy toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a float or fixed-point SVM")
    _add_data_flags(t)
    _add_train_flags(t)
    t.add_argument("--precision", type=_precision, default=None, metavar="BX,BF,BW")
    _add_out_flags(t)
    t.set_defaults(func=cmd_train)

    b = sub.add_parser("bounds", help="evaluate the precision bounds for a trained model")
    _add_data_flags(b)
    b.add_argument("--model", required=True, help="model JSON written by `train`")
    b.add_argument("--bf", type=int, default=6)
    b.add_argument("--bx", type=int, default=6)
    b.add_argument("--gamma-log2", type=int, default=5)
    b.add_argument("--target-pm", type=float, default=None)
    b.add_argument("--stats-split", choices=("train", "test", "all"), default="train")
    _add_out_flags(b)
    b.set_defaults(func=cmd_bounds)

    e = sub.add_parser("energy", help="energy and MEOP of the direct-mapped datapath")
    e.add_argument("--n", type=int, default=9)
    e.add_argument("--precision", type=_precision, default=PrecisionConfig(5, 6, 10), metavar="BX,BF,BW")
    e.add_argument("--gamma-log2", type=int, default=5)
    e.add_argument("--vdd", type=float, default=None)
    _add_electrical_flags(e)
    _add_out_flags(e)
    e.set_defaults(func=cmd_energy)

    r = sub.add_parser("reproduce", help="rerun a figure's experiment")
    r.add_argument("figure", choices=("fig2", "fig3", "fig4"))
    r.add_argument("--uci", default=None, metavar="PATH")
    r.add_argument("--synthetic-shape", type=int, nargs=3, default=[4, 1000, 0], metavar=("N", "M", "SEED"))
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--epochs", type=int, default=10)
    r.add_argument("--trials", type=int, default=ex.DEFAULT_TRIALS)
    r.add_argument("--train-fraction", type=float, default=0.7)
    r.add_argument("--split-seed", type=int, default=0)
    r.add_argument("--workers", type=int, default=None)
    _add_electrical_flags(r)
    _add_out_flags(r)
    r.set_defaults(func=cmd_reproduce)

    rp = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    rp.add_argument("manifest")
    rp.add_argument("--out", default=None)
    rp.set_defaults(func=cmd_replay)
    return p


def _resolved_flags(args) -> dict:
    out = {}
    for k, v in vars(args).items():
        if k == "func":
            continue
        out[k] = v.to_dict() if isinstance(v, PrecisionConfig) else v
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    timestamp = getattr(args, "timestamp", None) or dt.datetime.now(dt.timezone.utc).strftime("%Y%m%dT%H%M%S")
    if hasattr(args, "timestamp"):
        args.timestamp = timestamp
        argv = _replace_flag(argv, "--timestamp", timestamp)
    run = {"subcommand": args.command, "argv": argv, "flags": _resolved_flags(args), "timestamp": timestamp,
           "inputs": {}, "outputs": [], "version": ex.version_string()}
    t0 = time.perf_counter()
    try:
        code = args.func(args, run)
    except UsageError as e:
        print(f"fxsvm: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, DataError) as e:
        print(f"fxsvm: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # noqa: BLE001 - top-level boundary
        print(f"fxsvm: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    if args.command != "replay":
        run["wall_clock_s"] = round(time.perf_counter() - t0, 3)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        manifest = out / f"manifest_{args.command}_{timestamp}.json"
        manifest.write_text(json.dumps(run, indent=2, sort_keys=True, default=str) + "\n")
        print(f"manifest: {manifest}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
