"""CART decision trees (Gini) and bagged tree ensembles."""
from __future__ import annotations

import math

import numpy as np

from .base import ClassifierSpec, FittedClassifier


def _gini_children(Ls: np.ndarray, total: np.ndarray) -> np.ndarray:
    """Weighted child impurity (times n) for each candidate split position."""
    nl = Ls.sum(axis=1)
    R = total[None, :] - Ls
    nr = R.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        gl = nl - np.sum(Ls ** 2, axis=1) / np.where(nl > 0, nl, 1)
        gr = nr - np.sum(R ** 2, axis=1) / np.where(nr > 0, nr, 1)
    return gl + gr


class TreeStructure:
    def __init__(self, K: int):
        self.K = K
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[np.ndarray] = []

    def add(self, value) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        return len(self.feature) - 1

    def freeze(self):
        self.feature_a = np.asarray(self.feature)
        self.threshold_a = np.asarray(self.threshold)
        self.left_a = np.asarray(self.left)
        self.right_a = np.asarray(self.right)
        self.value_a = np.asarray(self.value)

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=int)
        active = self.feature_a[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature_a[nd]] <= self.threshold_a[nd]
            node[idx] = np.where(go_left, self.left_a[nd], self.right_a[nd])
            active = self.feature_a[node] >= 0
        return node

    @property
    def depth(self) -> int:
        def rec(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(rec(self.left[i]), rec(self.right[i]))
        return rec(0)


def build_tree(X: np.ndarray, y: np.ndarray, K: int, max_depth=None, min_leaf: int = 1,
               max_features=None, splitter: str = "best",
               rng: np.random.Generator | None = None) -> TreeStructure:
    n, d = X.shape
    rng = rng or np.random.default_rng(0)
    if max_features == "sqrt":
        m = max(1, int(math.sqrt(d)))
    elif max_features is None:
        m = d
    else:
        m = max(1, min(d, int(max_features)))
    Y = np.zeros((n, K))
    Y[np.arange(n), y] = 1.0
    tree = TreeStructure(K)
    root = tree.add(None)
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        counts = Y[idx].sum(axis=0)
        tree.value[node] = counts / counts.sum()
        if (np.count_nonzero(counts) <= 1 or len(idx) < 2 * min_leaf
                or (max_depth is not None and depth >= max_depth)):
            continue
        parent = len(idx) - np.sum(counts ** 2) / len(idx)
        feats = np.arange(d) if m == d else np.sort(rng.choice(d, m, replace=False))
        best = (parent - 1e-12, -1, 0.0)
        for f in feats:
            xs = X[idx, f]
            if splitter == "random":
                lo, hi = xs.min(), xs.max()
                if not hi > lo:
                    continue
                thr = lo + rng.random() * (hi - lo)
                if thr >= hi:
                    thr = lo
                mask = xs <= thr
                nl = mask.sum()
                if nl < min_leaf or len(idx) - nl < min_leaf:
                    continue
                Ls = Y[idx][mask].sum(axis=0)[None, :]
                score = _gini_children(Ls, counts)[0]
                if score < best[0]:
                    best = (score, int(f), float(thr))
                continue
            order = np.argsort(xs, kind="stable")
            xs_s = xs[order]
            Ls = np.cumsum(Y[idx][order], axis=0)[:-1]
            pos = np.arange(1, len(idx))  # left size
            ok = (xs_s[:-1] < xs_s[1:]) & (pos >= min_leaf) & (len(idx) - pos >= min_leaf)
            if not ok.any():
                continue
            scores = np.where(ok, _gini_children(Ls, counts), np.inf)
            i = int(np.argmin(scores))
            if scores[i] < best[0]:
                best = (float(scores[i]), int(f), float(0.5 * (xs_s[i] + xs_s[i + 1])))
        _, f, thr = best
        if f < 0:
            continue
        mask = X[idx, f] <= thr
        tree.feature[node] = f
        tree.threshold[node] = thr
        left = tree.add(None)
        right = tree.add(None)
        tree.left[node] = left
        tree.right[node] = right
        stack.append((right, idx[~mask], depth + 1))
        stack.append((left, idx[mask], depth + 1))
    tree.freeze()
    return tree


class DecisionTree(FittedClassifier):
    def __init__(self, spec: ClassifierSpec, X, y, K, seed=0):
        self.spec = spec
        self.n_classes = K
        self.n_train, self.n_features = X.shape
        hp = spec.hyperparameters
        self.tree = build_tree(X, y, K, hp["max_depth"], int(hp["min_leaf"]),
                               hp.get("max_features"), hp.get("splitter", "best"),
                               np.random.default_rng(seed))

    def _scores(self, X):
        return self.tree.value_a[self.tree.apply(X)]


class BaggedTrees(FittedClassifier):
    """Average of trees grown on bootstrap resamples (or the full set)."""

    def __init__(self, spec: ClassifierSpec, X, y, K, seed=0):
        self.spec = spec
        self.n_classes = K
        self.n_train, self.n_features = X.shape
        hp = spec.hyperparameters
        rng = np.random.default_rng(seed)
        self.trees = []
        n = len(y)
        for t in range(int(hp["n"])):
            rows = rng.integers(0, n, n) if hp["bootstrap"] else np.arange(n)
            tree_rng = np.random.default_rng(seed) if t == 0 and not hp["bootstrap"] else \
                np.random.default_rng(rng.integers(2 ** 63))
            self.trees.append(build_tree(X[rows], y[rows], K, hp["max_depth"], int(hp["min_leaf"]),
                                         hp.get("max_features"), hp.get("splitter", "best"),
                                         tree_rng))

    def _scores(self, X):
        out = np.zeros((len(X), self.n_classes))
        for t in self.trees:
            out += t.value_a[t.apply(X)]
        return out / len(self.trees)
