"""Fitting by spec and per-classifier hyperparameter search."""
from __future__ import annotations

import logging

import numpy as np

from ..bayesopt import optimize
from ..dataio import Dataset, kfold_indices
from .base import SEARCH_SPACES, ClassifierSpec, FittedClassifier
from .models import KNN, GaussianNB, LogisticRegression, Perceptron, RidgeClassifier
from .tree import BaggedTrees, DecisionTree

logger = logging.getLogger(__name__)

_IMPLEMENTATIONS = {
    "knn": KNN,
    "gaussian_nb": GaussianNB,
    "logistic_regression": LogisticRegression,
    "decision_tree": DecisionTree,
    "bagged_trees": BaggedTrees,
    "perceptron": Perceptron,
    "ridge_classifier": RidgeClassifier,
}


def fit_base(spec: ClassifierSpec, train: Dataset, seed: int = 0) -> FittedClassifier:
    if train.n == 0:
        raise ValueError("cannot fit on an empty training set")
    return _IMPLEMENTATIONS[spec.kind](spec, train.X, train.y, train.class_count, seed)


def cv_accuracy(spec: ClassifierSpec, train: Dataset, seed: int = 0, folds: int = 5) -> float:
    """Mean stratified k-fold accuracy; a fold whose fit fails scores 0."""
    k = min(folds, train.n)
    scores = []
    for tr, te in kfold_indices(train.n, k, train.y, seed):
        try:
            m = fit_base(spec, train.subset(tr), seed)
            scores.append(float(np.mean(m.predict(train.X[te]) == train.y[te])))
        except (ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
            logger.warning("fit of %s failed in CV: %s", spec.kind, exc)
            scores.append(0.0)
    return float(np.mean(scores))


def hpo_classifier(spec: ClassifierSpec, train: Dataset, budget: int, seed: int = 0,
                   return_history: bool = False, deadline: float | None = None):
    """Tune ``spec``'s searched hyperparameters by 5-fold CV accuracy.

    Budget 0 returns ``spec`` unchanged. The incoming setting is evaluated
    first, so the result never scores below it.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    if budget == 0:
        return (spec, []) if return_history else spec
    space = SEARCH_SPACES[spec.kind]
    result = optimize(space, lambda cfg: 1.0 - cv_accuracy(spec.with_params(**cfg), train, seed),
                      budget, seed=seed, initial=[spec.searched()], deadline=deadline)
    best = spec.with_params(**result.best_config)
    return (best, result.history) if return_history else best
