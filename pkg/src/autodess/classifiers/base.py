"""Classifier specs, declared hyperparameter spaces and the fitted-model interface."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..bayesopt import Boolean, ConfigurationSpace, Integer, Real

KINDS = ("knn", "gaussian_nb", "logistic_regression", "decision_tree",
         "bagged_trees", "perceptron", "ridge_classifier")
NON_PROBABILISTIC = frozenset({"perceptron", "ridge_classifier"})

SEARCH_SPACES: dict[str, ConfigurationSpace] = {
    "knn": ConfigurationSpace([Integer("k", 1, 15)]),
    "gaussian_nb": ConfigurationSpace([Real("var_smoothing", 1e-9, 1e-3, log=True)]),
    "logistic_regression": ConfigurationSpace([Real("l2", 1e-4, 10.0, log=True)]),
    "decision_tree": ConfigurationSpace([Integer("max_depth", 1, 12), Integer("min_leaf", 1, 8)]),
    "bagged_trees": ConfigurationSpace([Integer("n", 5, 50)]),
    "perceptron": ConfigurationSpace([Integer("epochs", 5, 100)]),
    "ridge_classifier": ConfigurationSpace([Real("alpha", 1e-3, 10.0, log=True)]),
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "knn": {"k": 5},
    "gaussian_nb": {"var_smoothing": 1e-9},
    "logistic_regression": {"l2": 1e-2},
    "decision_tree": {"max_depth": 8, "min_leaf": 1},
    "bagged_trees": {"n": 25},
    "perceptron": {"epochs": 20},
    "ridge_classifier": {"alpha": 1.0},
}

# settings outside the searched space, fixed unless given explicitly
EXTRAS: dict[str, dict[str, Any]] = {
    "logistic_regression": {"max_iter": 500},
    "decision_tree": {"max_features": None, "splitter": "best"},
    "bagged_trees": {"bootstrap": True, "max_depth": None, "min_leaf": 1,
                     "max_features": None, "splitter": "best"},
}


# explicit settings allowed outside the searched range
WIDER_BOUNDS: dict[tuple[str, str], tuple[int, int]] = {
    ("bagged_trees", "n"): (1, 50),
}


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    hyperparameters: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown classifier kind {self.kind!r}")
        hp = {**DEFAULTS[self.kind], **EXTRAS.get(self.kind, {}), **self.hyperparameters}
        allowed = set(DEFAULTS[self.kind]) | set(EXTRAS.get(self.kind, {}))
        unknown = set(hp) - allowed
        if unknown:
            raise SpecError(f"{self.kind}: unknown hyperparameters {sorted(unknown)}")
        space = SEARCH_SPACES[self.kind]
        for dim in space.dimensions:
            v = hp[dim.name]
            if self.kind == "decision_tree" and dim.name == "max_depth" and v is None:
                continue  # unlimited depth
            bounds = WIDER_BOUNDS.get((self.kind, dim.name))
            if bounds is not None:
                if not (isinstance(v, (int, np.integer)) and bounds[0] <= v <= bounds[1]):
                    raise SpecError(f"{self.kind}.{dim.name}={v!r} outside {bounds}")
                continue
            if not _inside(dim, v):
                raise SpecError(f"{self.kind}.{dim.name}={v!r} outside declared range")
        object.__setattr__(self, "hyperparameters", hp)

    @property
    def probabilistic(self) -> bool:
        return self.kind not in NON_PROBABILISTIC

    def searched(self) -> dict[str, Any]:
        return {n: self.hyperparameters[n] for n in SEARCH_SPACES[self.kind].names}

    def with_params(self, **params) -> "ClassifierSpec":
        return ClassifierSpec(self.kind, {**self.hyperparameters, **params})

    def to_dict(self) -> dict:
        return {"kind": self.kind, "hyperparameters": dict(self.hyperparameters)}

    @classmethod
    def from_dict(cls, d: dict) -> "ClassifierSpec":
        return cls(d["kind"], dict(d.get("hyperparameters", {})))


def _inside(dim, v) -> bool:
    try:
        dim.encode(v)
    except ValueError:
        return False
    return True


def default_spec(kind: str) -> ClassifierSpec:
    return ClassifierSpec(kind)


class FittedClassifier:
    """Common surface of every trained model.

    Subclasses implement ``_scores``; ``predict`` is the row-wise argmax of
    ``decision_scores`` with ties going to the lowest class index.
    """

    spec: ClassifierSpec
    n_classes: int
    n_features: int
    n_train: int

    @property
    def probabilistic(self) -> bool:
        return self.spec.probabilistic

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return X

    def _scores(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def decision_scores(self, X) -> np.ndarray:
        return self._scores(self._check(X))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.decision_scores(X), axis=1)

    def predict_proba(self, X) -> np.ndarray:
        if not self.probabilistic:
            raise TypeError(f"{self.spec.kind} has no probability output; calibrate it first")
        return self.decision_scores(X)


def standardizer(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale < 1e-12] = 1.0
    return mean, scale
