"""Scores, imbalance ratio, Wilcoxon signed-rank test and comparison tables."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise ValueError("empty label arrays")
    return pred, truth


def accuracy(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return float(np.mean(pred == truth))


@dataclass
class ConfusionCounts:
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    tn: np.ndarray

    @property
    def n(self) -> int:
        return int(self.tp[0] + self.fp[0] + self.fn[0] + self.tn[0])


def confusion_counts(pred, truth, n_classes: int | None = None) -> ConfusionCounts:
    pred, truth = _pair(pred, truth)
    K = n_classes or int(max(pred.max(), truth.max())) + 1
    cm = np.zeros((K, K), dtype=int)
    np.add.at(cm, (truth, pred), 1)
    tp = np.diag(cm)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    tn = cm.sum() - tp - fp - fn
    return ConfusionCounts(tp, fp, fn, tn)


def f1_from_counts(tp, fp, fn) -> np.ndarray:
    """Per-class F1; a class with no predicted and no true members scores 0."""
    tp, fp, fn = (np.asarray(a, dtype=float) for a in (tp, fp, fn))
    denom = 2 * tp + fp + fn
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(denom > 0, 2 * tp / np.where(denom > 0, denom, 1), 0.0)
    return out


def f1(pred, truth, mode: str = "macro", positive: int = 1,
       labels: Sequence[int] | None = None) -> float:
    """F1 score.

    ``mode`` is ``"binary"`` (F1 of ``positive``), ``"macro"`` (unweighted mean
    over classes) or ``"weighted"`` (mean weighted by true support). Classes
    default to those present in either array.
    """
    pred, truth = _pair(pred, truth)
    if mode == "binary":
        tp = np.sum((pred == positive) & (truth == positive))
        fp = np.sum((pred == positive) & (truth != positive))
        fn = np.sum((pred != positive) & (truth == positive))
        return float(f1_from_counts(tp, fp, fn))
    if labels is None:
        labels = np.union1d(pred, truth)
    labels = np.asarray(labels, dtype=int)
    K = int(max(labels.max(), pred.max(), truth.max())) + 1
    cc = confusion_counts(pred, truth, K)
    per = f1_from_counts(cc.tp, cc.fp, cc.fn)[labels]
    if mode == "macro":
        return float(per.mean())
    if mode == "weighted":
        support = (cc.tp + cc.fn)[labels].astype(float)
        return float(np.sum(per * support) / support.sum()) if support.sum() else 0.0
    raise ValueError(f"unknown F1 mode {mode!r}")


def imbalance_ratio(labels) -> float:
    _, counts = np.unique(np.asarray(labels), return_counts=True)
    if len(counts) < 2:
        raise ValueError("imbalance ratio needs at least two classes")
    return float(counts.max() / counts.min())


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


@dataclass
class WilcoxonResult:
    z: float
    p_value: float
    median_difference: float
    statistic: float  # min(W+, W-)
    w_plus: float
    w_minus: float
    n: int  # nonzero differences


def _exact_two_sided(ranks: np.ndarray, w_plus: float) -> float:
    # distribution of W+ over all sign assignments; ranks doubled to stay integral
    r2 = np.rint(2 * ranks).astype(int)
    total = int(r2.sum())
    dist = np.zeros(total + 1)
    dist[0] = 1.0
    for r in r2:
        shifted = np.zeros_like(dist)
        shifted[r:] = dist[:-r]
        dist = dist + shifted
    dist /= dist.sum()
    w2 = int(round(2 * w_plus))
    mean2 = total / 2
    dev = abs(w2 - mean2)
    idx = np.arange(total + 1)
    return float(min(1.0, dist[np.abs(idx - mean2) >= dev - 1e-9].sum()))


def wilcoxon_signed_rank(a, b, correction: bool = True, method: str = "approx",
                         min_pairs: int = 5) -> WilcoxonResult:
    """Paired Wilcoxon signed-rank test on ``a - b``.

    Zero differences are dropped, tied magnitudes get average ranks and the
    normal approximation uses the tie-corrected variance (plus a 0.5
    continuity correction unless disabled). ``z`` is positive when ``a``
    tends to exceed ``b``. ``method="exact"`` replaces the p-value with the
    exact permutation probability.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("paired samples must be finite")
    diff = a - b
    med = float(np.median(diff)) if diff.size else 0.0
    nz = diff[diff != 0]
    n = len(nz)
    if n < min_pairs:
        raise ValueError(f"only {n} nonzero differences; need at least {min_pairs}")
    ranks = _average_ranks(np.abs(nz))
    w_plus = float(ranks[nz > 0].sum())
    w_minus = float(ranks[nz < 0].sum())
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(np.abs(nz), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts ** 3 - tie_counts) / 48.0
    dev = w_plus - mean
    if correction and dev != 0:
        dev -= 0.5 * math.copysign(1.0, dev)
    z = dev / math.sqrt(var) if var > 0 else 0.0
    if method == "approx":
        p = min(1.0, 2.0 * _norm_sf(abs(z)))
    elif method == "exact":
        p = _exact_two_sided(ranks, w_plus)
    else:
        raise ValueError(f"unknown method {method!r}")
    return WilcoxonResult(z, p, med, min(w_plus, w_minus), w_plus, w_minus, n)


# ---------------------------------------------------------------- comparison tables

def rank_rows(scores: np.ndarray, ties: str = "min") -> np.ndarray:
    """Rank methods within each row, 1 = highest score.

    ``ties="min"`` gives tied methods the best rank of their group
    (competition ranking); ``"average"`` gives them the mean rank.
    """
    scores = np.asarray(scores, dtype=float)
    out = np.empty_like(scores)
    for i, row in enumerate(scores):
        for j, v in enumerate(row):
            better = np.sum(row > v)
            equal = np.sum(row == v)
            if ties == "min":
                out[i, j] = better + 1
            elif ties == "average":
                out[i, j] = better + (equal + 1) / 2.0
            else:
                raise ValueError(f"unknown tie rule {ties!r}")
    return out


@dataclass
class ComparisonSummary:
    methods: list[str]
    means: dict[str, float]
    ranks: np.ndarray  # rows x methods
    mean_ranks: dict[str, float]
    included: np.ndarray  # rows x methods, False where a failure was excluded


def aggregate_comparison(table: Mapping[str, Sequence[float]],
                         failures: Mapping[str, Sequence[bool]] | None = None,
                         ties: str = "min",
                         exclude_failures_from_ranks: bool = True) -> ComparisonSummary:
    """Per-method means, per-row ranks and mean ranks over a score table.

    Rows flagged in ``failures`` are left out of that method's mean (and, by
    default, of its mean rank); every row still takes part in ranking.
    """
    methods = list(table)
    if len(methods) < 2:
        raise ValueError("need at least two methods")
    scores = np.column_stack([np.asarray(table[m], dtype=float) for m in methods])
    if scores.shape[0] < 2:
        raise ValueError("need at least two rows")
    included = np.ones_like(scores, dtype=bool)
    if failures is not None:
        for j, m in enumerate(methods):
            if m in failures:
                included[:, j] = ~np.asarray(failures[m], dtype=bool)
    ranks = rank_rows(scores, ties)
    means = {m: float(scores[included[:, j], j].mean()) for j, m in enumerate(methods)}
    rank_mask = included if exclude_failures_from_ranks else np.ones_like(included)
    mean_ranks = {m: float(ranks[rank_mask[:, j], j].mean()) for j, m in enumerate(methods)}
    return ComparisonSummary(methods, means, ranks, mean_ranks, included)


@dataclass
class ComparisonTable:
    rows: list[str]
    columns: dict[str, np.ndarray]

    def metric(self, suffix: str) -> dict[str, np.ndarray]:
        """Columns named ``<method>_<suffix>`` keyed by method."""
        tail = "_" + suffix
        return {c[: -len(tail)]: v for c, v in self.columns.items() if c.endswith(tail)}


def load_comparison(path, id_column: str = "dataset_name") -> ComparisonTable:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        records = list(reader)
        fields = reader.fieldnames or []
    if not records:
        raise ValueError(f"{path}: empty comparison table")
    rows = [r[id_column] for r in records]
    cols = {f: np.array([float(r[f]) for r in records]) for f in fields if f != id_column}
    return ComparisonTable(rows, cols)


def load_failure_mask(path, id_column: str = "dataset_name") -> tuple[list[str], dict[str, np.ndarray]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        records = list(reader)
        fields = reader.fieldnames or []
    truthy = {"true", "1", "yes"}
    rows = [r[id_column] for r in records]
    mask = {f: np.array([r[f].strip().lower() in truthy for r in records])
            for f in fields if f != id_column}
    return rows, mask
