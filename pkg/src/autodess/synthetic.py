"""Small seeded synthetic datasets for smoke runs and tests."""
from __future__ import annotations

import numpy as np

from .dataio import Dataset


def blobs(n: int = 200, d: int = 2, separation: float = 8.0, seed: int = 0) -> Dataset:
    """Two well separated Gaussian blobs, half the samples each."""
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    X = rng.normal(size=(n, d)) + separation * y[:, None]
    return Dataset(X, y, 2)


def imbalanced_gaussians(n: int = 400, imbalance: float = 9.0, d: int = 4,
                         shift: float = 1.25, seed: int = 0) -> Dataset:
    """Overlapping majority/minority Gaussians with ``imbalance`` majority per minority."""
    rng = np.random.default_rng(seed)
    n_min = int(round(n / (imbalance + 1)))
    y = np.zeros(n, dtype=int)
    y[:n_min] = 1
    y = rng.permutation(y)
    X = rng.normal(size=(n, d))
    X[y == 1] += shift
    # a little curvature so no single linear model is enough
    X[y == 1, 0] += 0.75 * X[y == 1, 1] ** 2 - 0.75
    return Dataset(X, y, 2)


def two_moons(n: int = 300, noise: float = 0.2, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    t = rng.uniform(0, np.pi, size=n)
    X = np.where(y[:, None] == 0,
                 np.column_stack([np.cos(t), np.sin(t)]),
                 np.column_stack([1 - np.cos(t), 0.5 - np.sin(t)]))
    X = X + rng.normal(0, noise, size=X.shape)
    return Dataset(X, y, 2)
