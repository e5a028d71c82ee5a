"""Stacked generalization over out-of-fold member probabilities."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..classifiers import ClassifierSpec, FittedClassifier, fit_base
from ..dataio import Dataset

META_SPEC = ClassifierSpec("logistic_regression", {"l2": 1e-2})
STACK_FOLDS = 5


@dataclass
class StackedModel:
    members: list[int]
    pool: Sequence
    meta: FittedClassifier
    n_classes: int
    pass_through: bool = False

    @property
    def input_width(self) -> int:
        return self.meta.n_features

    def meta_features(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        blocks = [self.pool[j].predict_proba(X) for j in self.members]
        if self.pass_through:
            blocks.append(X)
        return np.hstack(blocks)

    def predict(self, X) -> np.ndarray:
        return self.meta.predict(self.meta_features(X))

    def predict_proba(self, X) -> np.ndarray:
        return self.meta.predict_proba(self.meta_features(X))


def fit_stacked(flags, pool: Sequence, train: Dataset, seed: int = 0,
                pass_through: bool = False,
                oof: Mapping[int, np.ndarray] | None = None) -> StackedModel:
    """Fit a logistic meta-learner on out-of-fold probabilities of the flagged members.

    ``oof`` may supply precomputed out-of-fold probability matrices keyed by
    pool index; missing entries are computed with each member's ``oof_proba``.
    """
    members = [int(j) for j in np.flatnonzero(np.asarray(flags, dtype=bool))]
    if len(members) < 2:
        raise ValueError("stacking needs at least two members")
    blocks = []
    for j in members:
        if oof is not None and j in oof:
            blocks.append(np.asarray(oof[j]))
        else:
            blocks.append(pool[j].oof_proba(train, seed, STACK_FOLDS))
    if pass_through:
        blocks.append(train.X)
    Z = np.hstack(blocks)
    meta = fit_base(META_SPEC, train.with_features(Z), seed)
    return StackedModel(members, pool, meta, train.class_count, pass_through)
