"""Gaussian-process regression with a Matern-5/2 kernel."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

LENGTHSCALE_GRID = tuple(np.geomspace(0.05, 2.0, 5))
SIGNAL_GRID = tuple(np.geomspace(0.25, 4.0, 5))
NOISE_GRID = (1e-6, 1e-4, 1e-2)

_SQRT5 = math.sqrt(5.0)


def matern52(A: np.ndarray, B: np.ndarray, lengthscale: float, signal: float) -> np.ndarray:
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    sq = np.sum(A ** 2, 1)[:, None] + np.sum(B ** 2, 1)[None, :] - 2 * A @ B.T
    r = np.sqrt(np.maximum(sq, 0.0)) / lengthscale
    return signal * (1.0 + _SQRT5 * r + 5.0 / 3.0 * r ** 2) * np.exp(-_SQRT5 * r)


def _cholesky(K: np.ndarray) -> tuple[np.ndarray, float]:
    jitter = 0.0
    scale = max(float(np.mean(np.diag(K))), 1e-12)
    for attempt in range(12):
        try:
            return np.linalg.cholesky(K + jitter * np.eye(len(K))), jitter
        except np.linalg.LinAlgError:
            jitter = scale * 10.0 ** (attempt - 12)
    raise np.linalg.LinAlgError("kernel matrix not positive definite after jitter")


@dataclass
class GpState:
    X: np.ndarray
    y: np.ndarray
    lengthscale: float
    signal: float
    noise: float
    y_mean: float
    y_scale: float
    chol: np.ndarray
    alpha: np.ndarray
    log_marginal_likelihood: float
    jitter: float = 0.0

    def predict(self, Xq, standardized: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation at each row of ``Xq``."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        if not np.isfinite(Xq).all():
            raise ValueError("non-finite query point")
        Ks = matern52(Xq, self.X, self.lengthscale, self.signal)
        mu = Ks @ self.alpha
        v = np.linalg.solve(self.chol, Ks.T) if len(self.X) else np.zeros((0, len(Xq)))
        var = np.maximum(self.signal - np.sum(v ** 2, axis=0), 0.0)
        sd = np.sqrt(var)
        if standardized:
            return mu, sd
        return self.y_mean + self.y_scale * mu, self.y_scale * sd


def _lml(X, ys, ls, sf, sn):
    K = matern52(X, X, ls, sf) + sn * np.eye(len(X))
    L, jitter = _cholesky(K)
    alpha = np.linalg.solve(L.T, np.linalg.solve(L, ys))
    val = -0.5 * ys @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * len(X) * math.log(2 * math.pi)
    return float(val), L, alpha, jitter


def log_marginal_likelihood(X, y, lengthscale, signal, noise) -> float:
    """Log marginal likelihood of standardized ``y`` under fixed hyperparameters."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ys, _, _ = _standardize(np.asarray(y, dtype=float))
    return _lml(X, ys, lengthscale, signal, noise)[0]


def _standardize(y):
    m = float(np.mean(y))
    s = float(np.std(y))
    if not s > 1e-12:
        s = 1.0
    return (y - m) / s, m, s


def gp_fit(X, y, lengthscale: float | None = None, signal: float | None = None,
           noise: float | None = None) -> GpState:
    """Fit a GP, picking unspecified hyperparameters by grid marginal likelihood.

    Ties on the grid go to the first cell in (lengthscale, signal, noise)
    order. ``y`` is standardized internally.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(y) < 1 or len(X) != len(y):
        raise ValueError("need at least one observation with matching X rows")
    if not (np.isfinite(y).all() and np.isfinite(X).all()):
        raise ValueError("non-finite training data")
    ys, m, s = _standardize(y)
    grid = product(
        LENGTHSCALE_GRID if lengthscale is None else (lengthscale,),
        SIGNAL_GRID if signal is None else (signal,),
        NOISE_GRID if noise is None else (noise,),
    )
    best = None
    for ls, sf, sn in grid:
        val, L, alpha, jitter = _lml(X, ys, ls, sf, sn)
        if best is None or val > best[0]:
            best = (val, ls, sf, sn, L, alpha, jitter)
    val, ls, sf, sn, L, alpha, jitter = best
    return GpState(X, y, float(ls), float(sf), float(sn), m, s, L, alpha, val, jitter)


def gp_posterior(g: GpState, x) -> tuple[float, float]:
    mu, sd = g.predict(np.asarray(x, dtype=float)[None, :] if np.ndim(x) == 1 else x)
    return float(mu[0]), float(sd[0])
