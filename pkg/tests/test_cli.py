import json
import re
import subprocess
import sys
from pathlib import Path

import pytest

from fxsvm.cli import main
from fxsvm.datasets import generate_synthetic, save_csv

TS = "20260101T000000"


def manifest(out, cmd):
    return json.loads((Path(out) / f"manifest_{cmd}_{TS}.json").read_text())


def files(out):
    return {p.name: p.read_bytes() for p in sorted(Path(out).iterdir()) if not p.name.startswith("manifest")}


class TestTrain:
    def test_float(self, tmp_path, capsys):
        out = tmp_path / "o"
        code = main(["train", "--uci", "--gamma-log2", "5", "--lambda", "1", "--epochs", "3", "--seed", "7",
                     "--out", str(out), "--timestamp", TS])
        assert code == 0
        m = json.loads((out / f"train_uci_{TS}_model.json").read_text())
        assert m["n_dims"] == 9 and len(m["w"]) == 9
        assert (out / f"train_uci_{TS}_trace.csv").read_text().startswith("presentation,loss,windowed_loss")
        man = manifest(out, "train")
        assert man["subcommand"] == "train" and man["flags"]["seed"] == 7 and man["timestamp"] == TS
        assert "test error" in capsys.readouterr().out

    def test_fixed_records_regime(self, tmp_path):
        out = tmp_path / "o"
        assert main(["train", "--synthetic", "4", "200", "1", "--precision", "6,6,5", "--epochs", "1",
                     "--out", str(out), "--timestamp", TS]) == 0
        man = manifest(out, "train")
        assert man["regime"] == "DoubledSignSGD" and man["min_bw"] == 11

    def test_csv_input_digest(self, tmp_path):
        p = tmp_path / "d.csv"
        save_csv(generate_synthetic(3, 100, seed=2), p)
        out = tmp_path / "o"
        assert main(["train", "--csv", str(p), "--epochs", "1", "--out", str(out), "--timestamp", TS]) == 0
        assert list(manifest(out, "train")["inputs"]) == [str(p)]

    def test_missing_file(self, tmp_path, capsys):
        missing = tmp_path / "nope.csv"
        assert main(["train", "--uci", str(missing), "--out", str(tmp_path)]) == 3
        assert str(missing) in capsys.readouterr().err

    def test_bad_flags(self, tmp_path):
        assert main(["train"]) == 2
        assert main(["train", "--uci", "--precision", "6", "--out", str(tmp_path)]) == 2
        assert main(["train", "--uci", "--gamma-log2", "0", "--out", str(tmp_path)]) == 2
        assert main(["nosuch"]) == 2

    def test_precision_without_bw(self, tmp_path):
        assert main(["train", "--uci", "--precision", "6,6", "--out", str(tmp_path)]) == 2


class TestBounds:
    @pytest.fixture()
    def model_file(self, tmp_path):
        out = tmp_path / "m"
        main(["train", "--uci", "--epochs", "2", "--out", str(out), "--timestamp", TS])
        return out / f"train_uci_{TS}_model.json"

    def test_table(self, tmp_path, model_file, capsys):
        out = tmp_path / "b"
        code = main(["bounds", "--uci", "--model", str(model_file), "--bf", "6", "--bx", "6", "--gamma-log2", "5",
                     "--target-pm", "0.01", "--out", str(out), "--timestamp", TS])
        assert code == 0
        text = capsys.readouterr().out
        assert re.search(r"min_bw \(B_X=6, gamma=2\^-5\)\s+11\n", text)
        res = json.loads((out / f"bounds_uci_{TS}.json").read_text())
        assert res["min_bw"] == 11
        assert "feasible" in res["min_bx_for_target_pm"]

    def test_infeasible_is_an_answer(self, tmp_path, capsys):
        p = tmp_path / "wide.json"
        p.write_text(json.dumps({"w": [3.0] * 9, "b": 0.1, "n_dims": 9}))
        code = main(["bounds", "--uci", "--model", str(p), "--bf", "1", "--out", str(tmp_path / "b"),
                     "--timestamp", TS])
        assert code == 0
        assert "Infeasible" in capsys.readouterr().out

    def test_bad_model(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{}")
        assert main(["bounds", "--uci", "--model", str(p), "--out", str(tmp_path)]) == 3
        p.write_text(json.dumps({"w": [1.0, 2.0], "b": 0.0}))
        assert main(["bounds", "--uci", "--model", str(p), "--out", str(tmp_path)]) == 3


class TestEnergy:
    def test_report(self, tmp_path, capsys):
        out = tmp_path / "e"
        code = main(["energy", "--n", "9", "--precision", "5,6,10", "--gamma-log2", "5", "--vdd", "0.4",
                     "--out", str(out), "--timestamp", TS])
        assert code == 0
        res = json.loads((out / f"energy_N9_{TS}.json").read_text())
        assert res["n_fa"] == 517
        assert res["at_vdd"]["e_total"] == pytest.approx(9.7880842e-14, rel=1e-7)
        assert res["meop"]["v_star"] == 0.4
        assert "E_total @ 0.4 V" in capsys.readouterr().out

    def test_bad_params(self, tmp_path):
        assert main(["energy", "--alpha", "-1", "--out", str(tmp_path)]) == 2


class TestReproduce:
    def test_fig4(self, tmp_path, capsys):
        out = tmp_path / "f4"
        assert main(["reproduce", "fig4", "--out", str(out), "--timestamp", TS]) == 0
        text = capsys.readouterr().out
        assert "V*=0.400 V" in text and "published 5.3x" in text

    def test_fig2_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["reproduce", "fig2", "--seed", "7", "--trials", "20", "--epochs", "2", "--timestamp", TS]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b), "--workers", "3"]) == 0
        fa, fb = files(a), files(b)
        assert fa.keys() == fb.keys() and len(fa) == 4
        assert fa == fb

    def test_replay(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["reproduce", "fig3", "--trials", "10", "--epochs", "1", "--out", str(a),
                     "--timestamp", TS]) == 0
        assert main(["replay", str(a / f"manifest_reproduce_{TS}.json"), "--out", str(b)]) == 0
        assert files(a) == files(b)
        ma, mb = manifest(a, "reproduce"), manifest(b, "reproduce")
        for m in (ma, mb):
            m.pop("wall_clock_s")
            m["outputs"] = [Path(p).name for p in m["outputs"]]
            m["argv"] = [x for x in m["argv"] if x not in (str(a), str(b))]
            m["flags"].pop("out")
        assert ma == mb

    def test_default_timestamp_recorded(self, tmp_path):
        out = tmp_path / "e"
        assert main(["energy", "--out", str(out)]) == 0
        (man,) = out.glob("manifest_energy_*.json")
        data = json.loads(man.read_text())
        assert "--timestamp" in data["argv"] and data["timestamp"] in man.name


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "fxsvm", "energy", "--out", str(tmp_path), "--timestamp", TS],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "MEOP V_dd" in r.stdout
