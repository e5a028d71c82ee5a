"""Base classifier pool."""
from .base import (DEFAULTS, KINDS, NON_PROBABILISTIC, SEARCH_SPACES, ClassifierSpec,
                   FittedClassifier, SpecError, default_spec)
from .hpo import cv_accuracy, fit_base, hpo_classifier
from .models import KNN, GaussianNB, LogisticRegression, Perceptron, RidgeClassifier
from .tree import BaggedTrees, DecisionTree, build_tree


def predict(m: FittedClassifier, X):
    return m.predict(X)


def decision_scores(m: FittedClassifier, X):
    return m.decision_scores(X)


__all__ = [
    "DEFAULTS", "KINDS", "NON_PROBABILISTIC", "SEARCH_SPACES", "BaggedTrees", "ClassifierSpec",
    "DecisionTree", "FittedClassifier", "GaussianNB", "KNN", "LogisticRegression", "Perceptron",
    "RidgeClassifier", "SpecError", "build_tree", "cv_accuracy", "decision_scores", "default_spec",
    "fit_base", "hpo_classifier", "predict",
]
