"""Every CLI run leaves a manifest that can be replayed byte for byte.

This drives the command-line interface in-process: it runs the synthetic
accuracy and convergence experiment, replays it from the manifest into a
second directory and compares the files.

    python demos/04_reproducible_runs.py
"""
import contextlib
import io
import json
import tempfile
from pathlib import Path

from fxsvm.cli import main

with tempfile.TemporaryDirectory() as tmp:
    first, second = Path(tmp, "first"), Path(tmp, "second")
    with contextlib.redirect_stdout(io.StringIO()):
        main(["reproduce", "fig3", "--trials", "50", "--epochs", "3", "--out", str(first)])
    (man_path,) = first.glob("manifest_*.json")
    manifest = json.loads(man_path.read_text())
    print("recorded command:", "fxsvm", " ".join(manifest["argv"]))
    print("outputs:")
    for p in manifest["outputs"]:
        print("  ", Path(p).name)

    with contextlib.redirect_stdout(io.StringIO()):
        main(["replay", str(man_path), "--out", str(second)])
    for p in sorted(first.iterdir()):
        if p.name.startswith("manifest"):
            continue
        same = p.read_bytes() == (second / p.name).read_bytes()
        print(f"{p.name:45s} {'identical' if same else 'DIFFERENT'}")
