"""Platt scaling of decision scores, one-vs-rest for multiclass pools."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classifiers import ClassifierSpec, FittedClassifier, fit_base
from .dataio import Dataset, kfold_indices

P_MIN = 1e-12
EXP_CLAMP = 500.0


@dataclass(frozen=True)
class PlattParams:
    A: float
    B: float
    converged: bool = True
    # set when the fit ended with A > 0, i.e. scores anti-correlate with the label
    inverted: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.A) and math.isfinite(self.B)):
            raise ValueError("Platt parameters must be finite")

    def to_list(self) -> list[float]:
        return [self.A, self.B]


def platt_prob(p: PlattParams, f):
    """P(y=1 | f) = 1 / (1 + exp(A f + B)), clamped away from 0 and 1."""
    z = np.clip(p.A * np.asarray(f, dtype=float) + p.B, -EXP_CLAMP, EXP_CLAMP)
    out = np.clip(1.0 / (1.0 + np.exp(z)), P_MIN, 1.0 - P_MIN)
    return float(out) if np.ndim(out) == 0 else out


def smoothed_targets(labels: np.ndarray) -> np.ndarray:
    n_pos = int(np.sum(labels == 1))
    n_neg = len(labels) - n_pos
    return np.where(labels == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))


def platt_objective(A: float, B: float, scores, targets) -> float:
    """Negative log-likelihood of ``targets`` under the sigmoid, computed stably."""
    z = A * np.asarray(scores, dtype=float) + B
    t = np.asarray(targets, dtype=float)
    # -log p = log(1 + e^z), -log(1-p) = log(1 + e^-z)
    return float(np.sum(t * np.logaddexp(0.0, z) + (1 - t) * np.logaddexp(0.0, -z)))


def _gradient(A, B, f, t):
    z = A * f + B
    p = 0.5 * (1.0 - np.tanh(0.5 * z))  # 1 / (1 + e^z) without overflow
    r = t - p  # d(objective)/dz
    return float(np.sum(r * f)), float(np.sum(r))


def fit_platt(scores, labels, seed: int = 0, tol: float = 1e-6,
              max_iter: int = 10000) -> PlattParams:
    """Maximum-likelihood sigmoid fit by gradient descent with backtracking.

    Targets are smoothed to (N+ + 1)/(N+ + 2) and 1/(N- + 2). The descent runs
    on standardized scores (a reparameterization of the same objective) and
    stops once the gradient in the original (A, B) falls below ``tol``.
    ``seed`` is accepted for interface symmetry; the fit is deterministic.
    """
    f = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    if f.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    if not np.isfinite(f).all():
        raise ValueError("scores must be finite")
    n_pos = int(np.sum(y == 1))
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("Platt fitting needs both classes")
    t = smoothed_targets(y)

    m = float(f.mean())
    s = float(f.std())
    if not s > 1e-12:
        s = 1.0
    g = (f - m) / s
    # A f + B = a g + b  with  a = A s,  b = B + A m
    a, b = 0.0, math.log((n_neg + 1.0) / (n_pos + 1.0))
    obj = platt_objective(a, b, g, t)
    step = 1.0 / len(f)
    converged = False
    for _ in range(max_iter):
        ga, gb = _gradient(a, b, g, t)
        gA, gB = ga / s, gb - ga * m / s
        if math.hypot(gA, gB) <= tol:
            converged = True
            break
        step *= 2.0
        while True:
            na, nb = a - step * ga, b - step * gb
            new = platt_objective(na, nb, g, t)
            if new <= obj - 1e-4 * step * (ga * ga + gb * gb) or step < 1e-20:
                break
            step *= 0.5
        if step < 1e-20:
            break
        a, b, obj = na, nb, new
    A = a / s
    B = b - A * m
    return PlattParams(A, B, converged, A > 0)


@dataclass
class CalibratedClassifier(FittedClassifier):
    """A base model whose per-class scores pass through fitted sigmoids, then normalize."""

    base: FittedClassifier
    params: list[PlattParams]

    def __post_init__(self):
        if len(self.params) != self.base.n_classes:
            raise ValueError("need one Platt fit per class")
        self.spec = self.base.spec
        self.n_classes = self.base.n_classes
        self.n_features = self.base.n_features
        self.n_train = self.base.n_train

    @property
    def probabilistic(self) -> bool:
        return True

    def _scores(self, X):
        raw = self.base.decision_scores(X)
        return normalize_sigmoids(raw, self.params)

    def predict_proba(self, X):
        return self.decision_scores(X)


def normalize_sigmoids(raw: np.ndarray, params: list[PlattParams]) -> np.ndarray:
    P = np.column_stack([platt_prob(p, raw[:, k]) for k, p in enumerate(params)])
    return P / P.sum(axis=1, keepdims=True)


def fit_one_vs_rest(scores: np.ndarray, y: np.ndarray, K: int, seed: int = 0) -> list[PlattParams]:
    missing = [k for k in range(K) if not np.any(y == k)]
    if missing:
        raise ValueError(f"calibration data lacks classes {missing}")
    return [fit_platt(scores[:, k], (y == k).astype(int), seed) for k in range(K)]


def calibrate_multiclass(base: FittedClassifier, cal: Dataset, seed: int = 0) -> CalibratedClassifier:
    scores = base.decision_scores(cal.X)
    return CalibratedClassifier(base, fit_one_vs_rest(scores, cal.y, base.n_classes, seed))


def calibrate_out_of_fold(spec: ClassifierSpec, train: Dataset, seed: int = 0,
                          folds: int = 3) -> CalibratedClassifier:
    """Calibrate on held-out-fold scores, then wrap a model fitted on all of ``train``."""
    scores = np.zeros((train.n, train.class_count))
    for tr, te in kfold_indices(train.n, min(folds, train.n), train.y, seed):
        m = fit_base(spec, train.subset(tr), seed)
        scores[te] = m.decision_scores(train.X[te])
    params = fit_one_vs_rest(scores, train.y, train.class_count, seed)
    return CalibratedClassifier(fit_base(spec, train, seed), params)


def log_loss(probs, labels) -> float:
    p = np.clip(np.asarray(probs, dtype=float), P_MIN, 1 - P_MIN)
    y = np.asarray(labels, dtype=float)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))
