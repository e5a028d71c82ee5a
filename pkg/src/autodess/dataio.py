"""Tabular input: CSV loading, preprocessing, stratified splits and folds."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_MISSING = ("", "?")
MISSING_CATEGORY = "<missing>"


class DataError(ValueError):
    """Raised for malformed input tables or impossible splits."""


@dataclass
class Column:
    name: str
    kind: str  # "numeric" | "categorical"
    cells: list  # float | str | None (None marks a missing cell)


@dataclass
class RawTable:
    columns: list[Column]
    n_rows: int

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DataError("duplicate column names")
        for c in self.columns:
            if len(c.cells) != self.n_rows:
                raise DataError(f"column {c.name!r} has {len(c.cells)} cells, expected {self.n_rows}")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def take(self, rows: Sequence[int]) -> "RawTable":
        rows = list(rows)
        cols = [Column(c.name, c.kind, [c.cells[i] for i in rows]) for c in self.columns]
        return RawTable(cols, len(rows))


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    class_count: int
    feature_names: list[str] = field(default_factory=list)
    index: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2:
            raise DataError("X must be 2-D")
        self.y = np.asarray(self.y, dtype=int)
        if len(self.y) != len(self.X):
            raise DataError("X and y lengths differ")
        if self.class_count < 2:
            raise DataError("need at least two classes")
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= self.class_count):
            raise DataError("labels outside [0, K)")
        if np.isnan(self.X).any():
            raise DataError("X contains missing values")
        if not self.feature_names:
            self.feature_names = [f"x{j}" for j in range(self.X.shape[1])]
        if self.index is None:
            self.index = np.arange(len(self.y))
        else:
            self.index = np.asarray(self.index, dtype=int)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.X[rows], self.y[rows], self.class_count,
                       list(self.feature_names), self.index[rows])

    def with_features(self, X: np.ndarray, names: list[str] | None = None) -> "Dataset":
        return Dataset(X, self.y, self.class_count, names or [], self.index)


@dataclass
class SplitSpec:
    train_fraction: float = 0.6
    val_fraction: float = 0.2
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fr = (self.train_fraction, self.val_fraction, self.test_fraction)
        if any(not 0 < f < 1 for f in fr):
            raise DataError("each split fraction must lie in (0, 1)")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise DataError("split fractions must sum to 1")


def _parse_float(s: str) -> float | None:
    try:
        v = float(s)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_table(path, label_column: str | None = None,
               missing: Sequence[str] = DEFAULT_MISSING) -> RawTable:
    """Read a header-first CSV into typed columns.

    A column is numeric when every non-missing cell parses as a finite real,
    categorical otherwise. Cells equal to one of ``missing`` (after stripping
    whitespace) are stored as ``None``.
    """
    missing = set(missing)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise DataError(f"{path}: no data rows")
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataError(f"{path}: line {i} has {len(r)} fields, header has {len(header)}")
    if label_column is not None and label_column not in header:
        raise DataError(f"label column {label_column!r} not in header")

    columns = []
    for j, name in enumerate(header):
        raw = [r[j].strip() for r in body]
        cells: list = [None if v in missing else v for v in raw]
        parsed = [None if v is None else _parse_float(v) for v in cells]
        numeric = all(p is not None for p, v in zip(parsed, cells) if v is not None)
        if numeric:
            columns.append(Column(name, "numeric", parsed))
        else:
            columns.append(Column(name, "categorical", cells))
    return RawTable(columns, len(body))


def _sort_key(v):
    # numeric-looking labels sort by value, others lexically after them
    if isinstance(v, float):
        return (0, v, "")
    return (1, 0.0, str(v))


@dataclass
class Preprocessor:
    """Frozen preprocessing statistics learned from one table."""

    label_column: str
    features: list[tuple[str, str, object]]  # (name, kind, mean | categories)
    classes: list

    def feature_names(self) -> list[str]:
        names = []
        for name, kind, stat in self.features:
            if kind == "numeric":
                names.append(name)
            else:
                names.extend(f"{name}={cat}" for cat in stat)
        return names

    def transform(self, t: RawTable) -> Dataset:
        blocks = []
        for name, kind, stat in self.features:
            try:
                col = t.column(name)
            except KeyError:
                raise DataError(f"column {name!r} missing from table") from None
            if kind == "numeric":
                vals = []
                for v in col.cells:
                    if v is None:
                        vals.append(stat)
                    else:
                        f = v if isinstance(v, float) else _parse_float(v)
                        if f is None:
                            raise DataError(f"non-numeric value {v!r} in numeric column {name!r}")
                        vals.append(f)
                blocks.append(np.asarray(vals, dtype=float)[:, None])
            else:
                cats = list(stat)
                block = np.zeros((t.n_rows, len(cats)))
                for i, v in enumerate(col.cells):
                    key = MISSING_CATEGORY if v is None else _cat_name(v)
                    if key in cats:
                        block[i, cats.index(key)] = 1.0
                blocks.append(block)
        X = np.hstack(blocks) if blocks else np.zeros((t.n_rows, 0))
        lab = t.column(self.label_column) if self.label_column in t.names else None
        if lab is None:
            raise DataError(f"label column {self.label_column!r} missing from table")
        lookup = {_label_key(c): i for i, c in enumerate(self.classes)}
        y = []
        for v in lab.cells:
            if v is None:
                raise DataError("label column has missing values")
            key = _label_key(v)
            if key not in lookup:
                raise DataError(f"unknown label {v!r}")
            y.append(lookup[key])
        return Dataset(X, np.asarray(y, dtype=int), len(self.classes), self.feature_names())


def _cat_name(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _label_key(v):
    if isinstance(v, str):
        f = _parse_float(v)
        return f if f is not None else v
    return float(v)


def fit_preprocessor(t: RawTable, label_column: str) -> Preprocessor:
    if label_column not in t.names:
        raise DataError(f"label column {label_column!r} not in table")
    lab = t.column(label_column)
    if any(v is None for v in lab.cells):
        raise DataError("label column has missing values")
    classes = sorted({_label_key(v) for v in lab.cells}, key=_sort_key)
    if len(classes) < 2:
        raise DataError("label column has only one distinct value")

    features = []
    for col in t.columns:
        if col.name == label_column:
            continue
        present = [v for v in col.cells if v is not None]
        if not present:
            raise DataError(f"column {col.name!r} is entirely missing")
        if col.kind == "numeric":
            features.append((col.name, "numeric", float(np.mean(present))))
        else:
            cats = sorted({_cat_name(v) for v in present})
            if len(present) < t.n_rows:
                cats.append(MISSING_CATEGORY)
            features.append((col.name, "categorical", cats))
    return Preprocessor(label_column, features, classes)


def preprocess(t: RawTable, label_column: str) -> Dataset:
    """Mean-impute numeric columns, one-hot encode categorical ones, encode labels."""
    return fit_preprocessor(t, label_column).transform(t)


def _allocate(n_c: int, fractions: Sequence[float]) -> list[int]:
    counts = [int(round(n_c * f)) for f in fractions[:-1]]
    counts.append(n_c - sum(counts))
    # every split must see the class; borrow from the largest share
    for i in range(len(counts)):
        while counts[i] < 1:
            j = int(np.argmax(counts))
            if counts[j] <= 1:
                raise DataError("class too small to appear in every split")
            counts[j] -= 1
            counts[i] += 1
    return counts


def stratified_split(d: Dataset, s: SplitSpec | None = None) -> tuple[Dataset, Dataset, Dataset]:
    """Per-class shuffled split into train/validation/test."""
    s = s or SplitSpec()
    rng = np.random.default_rng(s.seed)
    fractions = (s.train_fraction, s.val_fraction, s.test_fraction)
    parts: list[list[int]] = [[], [], []]
    for c in range(d.class_count):
        members = np.flatnonzero(d.y == c)
        if len(members) == 0:
            continue
        if len(members) < 3:
            raise DataError(f"class {c} has {len(members)} members; need at least 3")
        members = rng.permutation(members)
        counts = _allocate(len(members), fractions)
        start = 0
        for p, cnt in zip(parts, counts):
            p.extend(members[start:start + cnt].tolist())
            start += cnt
    return tuple(d.subset(sorted(p)) for p in parts)  # type: ignore[return-value]


def kfold_indices(n: int, k: int, labels: Sequence[int] | None = None,
                  seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Stratified k-fold splits as (train_idx, test_idx) pairs.

    Members of each class are shuffled, the classes are laid end to end and
    positions are dealt round-robin to folds, so fold sizes and per-class
    counts each differ by at most one.
    """
    if k < 2:
        raise DataError("k must be at least 2")
    if k > n:
        raise DataError(f"cannot make {k} folds from {n} samples")
    labels = np.zeros(n, dtype=int) if labels is None else np.asarray(labels)
    if len(labels) != n:
        raise DataError("labels length differs from n")
    rng = np.random.default_rng(seed)
    order = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if len(members) < k:
            logger.warning("class %s has %d members, fewer than %d folds", c, len(members), k)
        order.extend(rng.permutation(members).tolist())
    fold_of = np.empty(n, dtype=int)
    fold_of[np.asarray(order)] = np.arange(n) % k
    out = []
    for f in range(k):
        test = np.flatnonzero(fold_of == f)
        train = np.flatnonzero(fold_of != f)
        out.append((train, test))
    return out


def small_classes(labels: Sequence[int], k: int) -> list[int]:
    """Classes with fewer than ``k`` members (reported, not rejected)."""
    vals, counts = np.unique(np.asarray(labels), return_counts=True)
    return [int(v) for v, c in zip(vals, counts) if c < k]
