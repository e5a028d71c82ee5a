"""From-scratch learners behind the FittedClassifier interface."""
from __future__ import annotations

import math

import numpy as np

from .base import ClassifierSpec, FittedClassifier, standardizer


def _one_hot(y: np.ndarray, K: int) -> np.ndarray:
    Y = np.zeros((len(y), K))
    Y[np.arange(len(y)), y] = 1.0
    return Y


class _Model(FittedClassifier):
    def __init__(self, spec: ClassifierSpec, X: np.ndarray, y: np.ndarray, K: int):
        self.spec = spec
        self.n_classes = K
        self.n_train, self.n_features = X.shape


class KNN(_Model):
    """Vote fractions among the k nearest training points; distance ties go to lower index."""

    def __init__(self, spec, X, y, K, seed=0):
        super().__init__(spec, X, y, K)
        self.X = X.copy()
        self.y = y.copy()
        self.k = min(int(spec.hyperparameters["k"]), len(y))

    def neighbors(self, X: np.ndarray) -> np.ndarray:
        d2 = (np.sum(X ** 2, 1)[:, None] + np.sum(self.X ** 2, 1)[None, :] - 2 * X @ self.X.T)
        return np.argsort(np.maximum(d2, 0.0), axis=1, kind="stable")[:, : self.k]

    def _scores(self, X):
        out = np.zeros((len(X), self.n_classes))
        for start in range(0, len(X), 2048):
            nb = self.neighbors(X[start:start + 2048])
            labels = self.y[nb]
            for c in range(self.n_classes):
                out[start:start + len(nb), c] = np.sum(labels == c, axis=1)
        return out / self.k


class GaussianNB(_Model):
    def __init__(self, spec, X, y, K, seed=0):
        super().__init__(spec, X, y, K)
        floor = spec.hyperparameters["var_smoothing"] * float(np.max(X.var(axis=0), initial=0.0))
        floor = max(floor, 1e-12)
        self.means = np.zeros((K, self.n_features))
        self.vars = np.ones((K, self.n_features))
        self.log_prior = np.full(K, -np.inf)
        for c in range(K):
            Xc = X[y == c]
            if len(Xc):
                self.means[c] = Xc.mean(axis=0)
                self.vars[c] = Xc.var(axis=0) + floor
                self.log_prior[c] = math.log(len(Xc) / len(y))

    def _scores(self, X):
        ll = -0.5 * (np.sum(np.log(2 * np.pi * self.vars), axis=1)[None, :]
                     + np.sum((X[:, None, :] - self.means[None]) ** 2 / self.vars[None], axis=2))
        ll = ll + self.log_prior[None, :]
        ll -= ll.max(axis=1, keepdims=True)
        p = np.exp(ll)
        return p / p.sum(axis=1, keepdims=True)


def _softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


class LogisticRegression(_Model):
    """Multinomial logistic regression fitted by gradient descent.

    Features are standardized internally; the bias is not penalized. The step
    size starts at 1 and halves whenever a step would increase the loss.
    """

    def __init__(self, spec, X, y, K, seed=0):
        super().__init__(spec, X, y, K)
        self.mean, self.scale = standardizer(X)
        Z = (X - self.mean) / self.scale
        l2 = float(spec.hyperparameters["l2"])
        max_iter = int(spec.hyperparameters.get("max_iter", 500))
        Y = _one_hot(y, K)
        n = len(y)
        W = np.zeros((self.n_features, K))
        b = np.zeros(K)

        def loss_grad(W, b):
            P = _softmax(Z @ W + b)
            loss = -np.sum(Y * np.log(np.maximum(P, 1e-300))) / n + 0.5 * l2 * np.sum(W ** 2)
            G = (P - Y) / n
            return loss, Z.T @ G + l2 * W, G.sum(axis=0)

        step = 1.0
        loss, gW, gb = loss_grad(W, b)
        for _ in range(max_iter):
            if math.sqrt(np.sum(gW ** 2) + np.sum(gb ** 2)) < 1e-6:
                break
            W_new, b_new = W - step * gW, b - step * gb
            new_loss, new_gW, new_gb = loss_grad(W_new, b_new)
            if new_loss > loss:
                step *= 0.5
                continue
            W, b, loss, gW, gb = W_new, b_new, new_loss, new_gW, new_gb
        self.W, self.b = W, b
        self.loss = loss

    def _scores(self, X):
        return _softmax(((X - self.mean) / self.scale) @ self.W + self.b)


class Perceptron(_Model):
    """Multiclass perceptron on standardized features; scores are raw margins."""

    def __init__(self, spec, X, y, K, seed=0):
        super().__init__(spec, X, y, K)
        self.mean, self.scale = standardizer(X)
        Z = (X - self.mean) / self.scale
        rng = np.random.default_rng(seed)
        W = np.zeros((K, self.n_features))
        b = np.zeros(K)
        for _ in range(int(spec.hyperparameters["epochs"])):
            mistakes = 0
            for i in rng.permutation(len(y)):
                pred = int(np.argmax(W @ Z[i] + b))
                if pred != y[i]:
                    W[y[i]] += Z[i]
                    b[y[i]] += 1.0
                    W[pred] -= Z[i]
                    b[pred] -= 1.0
                    mistakes += 1
            if mistakes == 0:
                break
        self.W, self.b = W, b

    def _scores(self, X):
        return ((X - self.mean) / self.scale) @ self.W.T + self.b


class RidgeClassifier(_Model):
    """One-vs-rest ridge regression on {-1, +1} targets with an unpenalized intercept."""

    def __init__(self, spec, X, y, K, seed=0):
        super().__init__(spec, X, y, K)
        alpha = float(spec.hyperparameters["alpha"])
        T = 2.0 * _one_hot(y, K) - 1.0
        x_mean = X.mean(axis=0)
        t_mean = T.mean(axis=0)
        Xc = X - x_mean
        A = Xc.T @ Xc + alpha * np.eye(self.n_features)
        self.W = np.linalg.solve(A, Xc.T @ (T - t_mean))
        self.b = t_mean - x_mean @ self.W

    def _scores(self, X):
        return X @ self.W + self.b
