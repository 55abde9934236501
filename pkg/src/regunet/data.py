"""CSV ingestion, standardization, stratified splitting and synthetic data."""
import csv
import math
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DataError
from .tensor import Rng

DEFAULT_LABEL = "PCOS (Y/N)"


@dataclass(frozen=True)
class Standardization:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, X):
        if X.shape[1] != self.mean.shape[0]:
            raise DataError("standardization fitted on %d features, data has %d" % (self.mean.shape[0], X.shape[1]))
        return (X - self.mean) / self.std

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], dtype=np.float64), np.asarray(d["std"], dtype=np.float64))


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple
    standardization: Standardization | None = None
    dropped_rows: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0], 1):
            raise DataError("X must be n x d and y n x 1, got %s and %s" % (self.X.shape, self.y.shape))
        if not np.isfinite(self.X).all():
            raise DataError("features contain NaN or infinity")
        if not np.isin(self.y, (0.0, 1.0)).all():
            raise DataError("labels must be 0 or 1")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    def subset(self, indices):
        idx = np.asarray(indices, dtype=np.int64)
        return replace(self, X=self.X[idx], y=self.y[idx])


@dataclass(frozen=True)
class SplitIndices:
    train_idx: np.ndarray
    val_idx: np.ndarray


def _parse_float(text):
    text = text.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def load_csv(path, label_column=DEFAULT_LABEL, impute="none", exclude=(), report=sys.stderr):
    """Read a header-first CSV into a ``Dataset``.

    Every other column becomes a feature, in header order. Rows with a blank
    or unparseable feature cell are dropped (``impute="none"``) or have the
    cell replaced by the column median (``impute="median"``). Columns that
    are entirely blank are ignored; a column with text values and no numbers
    is an error.
    """
    if impute not in ("none", "median"):
        raise ConfigError("impute must be 'none' or 'median', got %r" % impute)
    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise DataError("data file not found: %s" % path) from None
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise DataError("%s is empty" % path)
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if label_column not in header:
        raise DataError("label column %r not found in %s" % (label_column, path))
    label_pos = header.index(label_column)
    excluded = set(exclude)

    labels = []
    for k, row in enumerate(body):
        cell = row[label_pos] if label_pos < len(row) else ""
        value = _parse_float(cell)
        if value not in (0.0, 1.0):
            raise DataError("row %d: label %r is not 0 or 1" % (k + 1, cell.strip()))
        labels.append(value)

    names, columns = [], []
    for j, name in enumerate(header):
        if j == label_pos or name in excluded:
            continue
        raw = [row[j] if j < len(row) else "" for row in body]
        parsed = [_parse_float(c) for c in raw]
        if all(v is None for v in parsed):
            if all(not c.strip() for c in raw):
                print("ignoring empty column %r" % name, file=report)
                continue
            raise DataError("column %r is not numeric" % name)
        names.append(name)
        columns.append(parsed)

    if not columns:
        raise DataError("no feature columns in %s" % path)
    n_rows = len(body)
    missing = [any(col[k] is None for col in columns) for k in range(n_rows)]
    dropped = 0
    if impute == "median":
        for col in columns:
            present = [v for v in col if v is not None]
            med = float(np.median(present))
            for k, v in enumerate(col):
                if v is None:
                    col[k] = med
        keep = list(range(n_rows))
        imputed = sum(missing)
        if imputed:
            print("imputed missing cells in %d rows" % imputed, file=report)
    else:
        keep = [k for k in range(n_rows) if not missing[k]]
        dropped = n_rows - len(keep)
        if dropped:
            print("dropped %d of %d rows with missing or unparseable cells" % (dropped, n_rows), file=report)
    if not keep:
        raise DataError("no usable rows in %s" % path)

    X = np.array([[col[k] for col in columns] for k in keep], dtype=np.float64)
    y = np.array([[labels[k]] for k in keep], dtype=np.float64)
    return Dataset(X, y, tuple(names), dropped_rows=dropped)


def stratified_split(ds, val_fraction=0.1, seed=0):
    """Class-proportional train/validation split.

    The validation size is ``round(n * val_fraction)`` shared across classes
    by largest remainder; members are chosen by a seeded permutation.
    """
    if not 0.0 < val_fraction < 0.5:
        raise ConfigError("val_fraction must lie in (0, 0.5), got %r" % val_fraction)
    y = ds.y.ravel()
    classes = [np.flatnonzero(y == c) for c in (0.0, 1.0)]
    for c, members in enumerate(classes):
        if members.size == 0:
            raise DataError("class %d has no samples" % c)
    n = y.size
    total = int(math.floor(n * val_fraction + 0.5))
    quotas = [members.size * val_fraction for members in classes]
    counts = [int(math.floor(q)) for q in quotas]
    order = sorted(range(2), key=lambda c: (-(quotas[c] - counts[c]), c))
    for c in order[: total - sum(counts)]:
        counts[c] += 1

    rng = Rng(seed, stream=11)
    val = []
    for members, count in zip(classes, counts):
        val.extend(members[rng.permutation(members.size)[:count]])
    val_idx = np.sort(np.asarray(val, dtype=np.int64))
    train_idx = np.setdiff1d(np.arange(n), val_idx)
    return SplitIndices(train_idx=train_idx, val_idx=val_idx)


def fit_standardization(X):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    # constant columns map to zero
    std = np.where(std > 1e-12, std, 1.0)
    return Standardization(mean, std)


def standardize(ds, fit_on):
    """Z-score every column using statistics of the training rows only."""
    if ds.standardization is not None:
        raise DataError("dataset is already standardized")
    st = fit_standardization(ds.X[fit_on.train_idx])
    return replace(ds, X=st.apply(ds.X), standardization=st)


def apply_standardization(ds, st):
    """Apply a stored transform (e.g. from a checkpoint) without refitting."""
    if ds.standardization is not None:
        raise DataError("dataset is already standardized")
    return replace(ds, X=st.apply(ds.X), standardization=st)


def synthetic_dataset(n, dim=41, margin=0.5, flip_rate=0.0, seed=0):
    """Linearly separable points around a random hyperplane, plus label noise.

    Points are standard normal, pushed away from the hyperplane through the
    origin so each lies at least ``margin`` from it; a Bernoulli(flip_rate)
    subset then has its label flipped.
    """
    if n < 4:
        raise ConfigError("synthetic dataset needs n >= 4")
    if margin <= 0:
        raise ConfigError("margin must be positive")
    if not 0.0 <= flip_rate < 0.5:
        raise ConfigError("flip_rate must lie in [0, 0.5)")
    rng = Rng(seed, stream=23)
    w = rng.normal(dim)
    w /= np.linalg.norm(w)
    X = rng.normal(n * dim).reshape(n, dim)
    side = np.where(X @ w >= 0, 1.0, -1.0)
    X = X + np.outer(side * margin, w)
    y = (side > 0).astype(np.float64)
    flips = rng.uniform(n) < flip_rate
    y = np.where(flips, 1.0 - y, y)
    names = tuple("x%d" % (j + 1) for j in range(dim))
    return Dataset(X, y.reshape(-1, 1), names, meta={"hyperplane": w, "flipped": int(flips.sum())})


def write_csv(ds, path, label_column=DEFAULT_LABEL):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.feature_names) + [label_column])
        for row, label in zip(ds.X, ds.y.ravel()):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
