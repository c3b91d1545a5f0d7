"""Dataset container, UCI breast-cancer loaders, synthetic data and splitting."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

UCI_WBC_RESOURCE = "breast-cancer-wisconsin.data"

# Synthetic default: w*^T x is roughly N(0, w_star_norm**2 / 3), so norm 3 puts
# ~43% of the samples inside |w*^T x| < 1 for N >= 2 (exactly 1/3 for N = 1).
DEFAULT_W_STAR_NORM = 3.0


class DataError(ValueError):
    """Raised for malformed input files or invalid dataset contents."""


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    provenance: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2:
            raise DataError(f"X must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DataError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        if not np.all(np.isin(y, (-1, 1))):
            raise DataError("labels must be +1 or -1")
        if X.size and (np.any(X < -1.0) or np.any(X > 1.0)):
            raise DataError("features must lie in [-1, 1]")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n_dims(self) -> int:
        return self.X.shape[1]

    @property
    def size(self) -> int:
        return self.X.shape[0]

    def __len__(self):
        return self.size

    def has_both_labels(self) -> bool:
        return bool(np.any(self.y == 1) and np.any(self.y == -1))

    def subset(self, idx, provenance=None) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], provenance or self.provenance, dict(self.meta))


def _require_nonempty(data: Dataset):
    if data.size == 0:
        raise DataError("dataset is empty")


def normalize_uci_attribute(a):
    """Map the integer UCI attribute scale 1..10 affinely onto [-1, 1]."""
    return (np.asarray(a, dtype=np.float64) - 5.5) / 4.5


def denormalize_uci_attribute(x):
    return np.asarray(x, dtype=np.float64) * 4.5 + 5.5


def load_uci_breast_cancer(path=None) -> Dataset:
    """Load the Wisconsin (Original) breast-cancer file.

    Layout per line: ``id, a1..a9, class`` with attributes in 1..10, ``?`` for
    missing values and class 2 (benign, -> -1) or 4 (malignant, -> +1).  Rows
    containing ``?`` are dropped.  With ``path=None`` the copy bundled with the
    package is used.
    """
    if path is None:
        text = resources.files("fxsvm.data").joinpath(UCI_WBC_RESOURCE).read_text()
        source = f"bundled:{UCI_WBC_RESOURCE}"
    else:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"no such file: {path}")
        text = path.read_text()
        source = str(path)

    feats, labels, dropped = [], [], 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 11:
            raise DataError(f"{source}:{lineno}: expected 11 fields, got {len(fields)}")
        attrs = fields[1:10]
        if "?" in attrs:
            dropped += 1
            continue
        try:
            vals = [int(a) for a in attrs]
        except ValueError:
            raise DataError(f"{source}:{lineno}: non-numeric attribute in {attrs}") from None
        if any(v < 1 or v > 10 for v in vals):
            raise DataError(f"{source}:{lineno}: attribute outside 1..10 in {vals}")
        cls = fields[10]
        if cls == "2":
            labels.append(-1)
        elif cls == "4":
            labels.append(1)
        else:
            raise DataError(f"{source}:{lineno}: unknown class label {cls!r}")
        feats.append(vals)

    X = normalize_uci_attribute(np.array(feats, dtype=np.float64).reshape(-1, 9))
    return Dataset(X, np.array(labels), "uci-breast-cancer-original",
                   {"source": source, "dropped_missing": dropped})


def load_uci_breast_cancer_diagnostic(path) -> Dataset:
    """Load the 30-feature Diagnostic variant (``id, M|B, f1..f30``).

    Each feature is min-max scaled to [-1, 1] over the whole file; constant
    columns map to 0.  ``M`` -> +1, ``B`` -> -1.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    feats, labels = [], []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) != 32:
                raise DataError(f"{path}:{lineno}: expected 32 fields, got {len(row)}")
            cls = row[1].strip()
            if cls not in ("M", "B"):
                raise DataError(f"{path}:{lineno}: unknown class label {cls!r}")
            try:
                feats.append([float(v) for v in row[2:]])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric feature") from None
            labels.append(1 if cls == "M" else -1)
    A = np.array(feats, dtype=np.float64).reshape(-1, 30)
    lo, hi = A.min(axis=0), A.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    X = np.where(hi > lo, 2.0 * (A - lo) / span - 1.0, 0.0)
    return Dataset(np.clip(X, -1.0, 1.0), np.array(labels), "uci-breast-cancer-diagnostic",
                   {"source": str(path)})


def load_csv(path) -> Dataset:
    """Generic CSV: label (+1/-1) in the first column, features after it."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    rows, labels, width = [], [], None
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
            try:
                label = int(float(row[0]))
                vals = [float(v) for v in row[1:]]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric field") from None
            if label not in (-1, 1):
                raise DataError(f"{path}:{lineno}: label must be +1 or -1, got {row[0]!r}")
            if any(not (-1.0 <= v <= 1.0) for v in vals):
                raise DataError(f"{path}:{lineno}: feature outside [-1, 1]")
            rows.append(vals)
            labels.append(label)
    if not rows:
        raise DataError(f"{path}: no samples")
    return Dataset(np.array(rows), np.array(labels), f"csv:{path.name}", {"source": str(path)})


def save_csv(data: Dataset, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        for x, y in zip(data.X, data.y):
            w.writerow([int(y)] + [repr(float(v)) for v in x])


def generate_synthetic(n_dims: int, size: int, w_star_norm: float = DEFAULT_W_STAR_NORM,
                       seed: int = 0) -> Dataset:
    """Separable data with many points inside the functional margin of w*.

    ``x ~ U[-1, 1]^N``, ``w* = w_star_norm * ones / sqrt(N)``, ``b* = 0`` and
    ``y = sign(w*^T x)``.  Points with ``w*^T x == 0`` are redrawn.  Smaller
    ``w_star_norm`` puts more points inside ``|w*^T x| < 1``.
    """
    if n_dims < 1 or size < 2 or not (w_star_norm > 0):
        raise DataError(f"invalid arguments n_dims={n_dims}, size={size}, w_star_norm={w_star_norm}")
    rng = np.random.default_rng(seed)
    w_star = np.full(n_dims, w_star_norm / math.sqrt(n_dims))
    X = rng.uniform(-1.0, 1.0, size=(size, n_dims))
    score = X @ w_star
    while np.any(score == 0.0):
        bad = score == 0.0
        X[bad] = rng.uniform(-1.0, 1.0, size=(int(bad.sum()), n_dims))
        score = X @ w_star
    y = np.where(score > 0, 1, -1)
    inside = float(np.mean(np.abs(score) < 1.0))
    return Dataset(X, y, f"synthetic-N{n_dims}-M{size}-s{seed}",
                   {"w_star": w_star.tolist(), "b_star": 0.0, "fraction_inside_margin": inside})


def split(data: Dataset, train_fraction: float, seed: int):
    """Seeded shuffle then prefix split; returns ``(train, test)``."""
    if not (0.0 < train_fraction < 1.0):
        raise DataError(f"train_fraction must be in (0, 1), got {train_fraction}")
    _require_nonempty(data)
    perm = np.random.default_rng(seed).permutation(data.size)
    n_train = int(math.floor(train_fraction * data.size))
    train = data.subset(perm[:n_train])
    test = data.subset(perm[n_train:])
    if not train.has_both_labels():
        raise DataError("train split contains a single class")
    return train, test
