"""Pool members, competence sets and regions of competence."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..calibration import CalibratedClassifier, normalize_sigmoids
from ..classifiers import ClassifierSpec, FittedClassifier, fit_base
from ..dataio import Dataset, kfold_indices


@dataclass
class PoolMember:
    """A fitted pool classifier plus what is needed to refit it on other data."""

    name: str
    spec: ClassifierSpec
    model: FittedClassifier

    @property
    def n_classes(self) -> int:
        return self.model.n_classes

    @property
    def calibrated(self) -> bool:
        return isinstance(self.model, CalibratedClassifier)

    def predict(self, X) -> np.ndarray:
        return self.model.predict(X)

    def predict_proba(self, X) -> np.ndarray:
        if self.model.probabilistic:
            return self.model.predict_proba(X)
        # uncalibrated margins: fall back to one-hot votes
        pred = self.model.predict(X)
        P = np.zeros((len(pred), self.n_classes))
        P[np.arange(len(pred)), pred] = 1.0
        return P

    def refit_proba(self, train: Dataset, X, seed: int = 0) -> np.ndarray:
        """Probabilities from a copy refit on ``train`` (calibration maps reused)."""
        m = fit_base(self.spec, train, seed)
        if self.calibrated:
            return normalize_sigmoids(m.decision_scores(X), self.model.params)
        if m.probabilistic:
            return m.predict_proba(X)
        P = np.zeros((len(X), self.n_classes))
        P[np.arange(len(X)), m.predict(X)] = 1.0
        return P

    def oof_proba(self, train: Dataset, seed: int = 0, folds: int = 5) -> np.ndarray:
        out = np.zeros((train.n, train.class_count))
        for tr, te in kfold_indices(train.n, min(folds, train.n), train.y, seed):
            out[te] = self.refit_proba(train.subset(tr), train.X[te], seed)
        return out


@dataclass
class CompetenceSet:
    """Held-out labeled data with cached pool outputs.

    ``correct[i, j]`` says whether pool member ``j`` classifies sample ``i``
    correctly; ``proba[i, j]`` is member ``j``'s probability row for sample ``i``.
    """

    X: np.ndarray
    y: np.ndarray
    n_classes: int
    preds: np.ndarray
    proba: np.ndarray
    seed: int = 0
    n_clusters: int = 5
    pool: list | None = field(default=None, repr=False)
    _clusters: tuple | None = field(default=None, repr=False)

    @property
    def correct(self) -> np.ndarray:
        return self.preds == self.y[:, None]

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def pool_size(self) -> int:
        return self.preds.shape[1]

    @property
    def accuracy(self) -> np.ndarray:
        return self.correct.mean(axis=0)

    def clusters(self) -> tuple[np.ndarray, np.ndarray]:
        """(centroids, assignment) of a seeded k-means on the competence features."""
        if self._clusters is None:
            self._clusters = kmeans(self.X, min(self.n_clusters, self.n), seed=self.seed)
        return self._clusters


def build_competence_set(pool: Sequence, dsel: Dataset, seed: int = 0,
                         n_clusters: int = 5) -> CompetenceSet:
    preds = np.column_stack([m.predict(dsel.X) for m in pool])
    proba = np.stack([m.predict_proba(dsel.X) for m in pool], axis=1)
    return CompetenceSet(dsel.X.copy(), dsel.y.copy(), dsel.class_count, preds, proba,
                         seed, n_clusters, list(pool))


@dataclass
class RegionOfCompetence:
    indices: np.ndarray
    distances: np.ndarray

    @property
    def k(self) -> int:
        return len(self.indices)


def neighbor_order(cs: CompetenceSet, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Competence-set indices sorted by distance for each query row (stable)."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    d2 = np.sum(Q ** 2, 1)[:, None] + np.sum(cs.X ** 2, 1)[None, :] - 2 * Q @ cs.X.T
    d = np.sqrt(np.maximum(d2, 0.0))
    order = np.argsort(d, axis=1, kind="stable")
    return order, np.take_along_axis(d, order, axis=1)


def region_of_competence(cs: CompetenceSet, query, k: int,
                         exclude: int | None = None) -> RegionOfCompetence:
    """The k nearest competence samples (Euclidean; ties to the lower index)."""
    limit = cs.n - (exclude is not None)
    if not 1 <= k <= limit:
        raise ValueError(f"k={k} outside [1, {limit}]")
    order, dist = neighbor_order(cs, np.asarray(query, dtype=float)[None, :])
    order, dist = order[0], dist[0]
    if exclude is not None:
        keep = order != exclude
        order, dist = order[keep], dist[keep]
    return RegionOfCompetence(order[:k], dist[:k])


def kmeans(X: np.ndarray, n_clusters: int, seed: int = 0, restarts: int = 10,
           max_iter: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's k-means with k-means++ seeding; best of ``restarts`` by inertia."""
    rng = np.random.default_rng(seed)
    n = len(X)
    best = None
    for _ in range(restarts):
        centers = [X[rng.integers(n)]]
        for _ in range(1, n_clusters):
            d2 = np.min(((X[:, None, :] - np.asarray(centers)[None]) ** 2).sum(-1), axis=1)
            total = d2.sum()
            idx = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
            centers.append(X[idx])
        C = np.asarray(centers, dtype=float)
        for _ in range(max_iter):
            assign = np.argmin(((X[:, None, :] - C[None]) ** 2).sum(-1), axis=1)
            newC = np.array([X[assign == c].mean(axis=0) if np.any(assign == c) else C[c]
                             for c in range(n_clusters)])
            if np.allclose(newC, C):
                break
            C = newC
        assign = np.argmin(((X[:, None, :] - C[None]) ** 2).sum(-1), axis=1)
        inertia = float(((X - C[assign]) ** 2).sum())
        if best is None or inertia < best[0] - 1e-12:
            best = (inertia, C, assign)
    return best[1], best[2]
