"""Acquisition functions for minimization and the hedging portfolio."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

KAPPA = 1.96
ACQUISITIONS = ("EI", "LCB", "PI")

_SQRT2 = math.sqrt(2.0)


def _cdf(z):
    z = np.asarray(z, dtype=float)
    return 0.5 * np.vectorize(math.erfc)(-z / _SQRT2)


def _pdf(z):
    z = np.asarray(z, dtype=float)
    with np.errstate(over="ignore"):
        return np.exp(-0.5 * z ** 2) / math.sqrt(2 * math.pi)


def expected_improvement(mu, sigma, best):
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    gap = best - mu
    safe = np.where(sigma > 0, sigma, 1.0)
    with np.errstate(over="ignore"):
        z = gap / safe
    ei = gap * _cdf(z) + safe * _pdf(z)
    return np.where(sigma > 0, np.maximum(ei, 0.0), np.maximum(gap, 0.0))


def lower_confidence_bound(mu, sigma, kappa: float = KAPPA):
    return np.asarray(mu, dtype=float) - kappa * np.asarray(sigma, dtype=float)


def probability_of_improvement(mu, sigma, best, kappa: float = KAPPA):
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    safe = np.where(sigma > 0, sigma, 1.0)
    with np.errstate(over="ignore"):
        z = (best - mu) / safe
    return np.where(sigma > 0, _cdf(z - kappa), (best - mu > 0).astype(float))


def acquisition(kind: str, mu, sigma, best, kappa: float = KAPPA):
    """Proposal score where lower is better: -EI, LCB or -PI."""
    if kind == "EI":
        return -expected_improvement(mu, sigma, best)
    if kind == "LCB":
        return lower_confidence_bound(mu, sigma, kappa)
    if kind == "PI":
        return -probability_of_improvement(mu, sigma, best, kappa)
    raise ValueError(f"unknown acquisition {kind!r}")


@dataclass
class HedgeState:
    gains: np.ndarray = field(default_factory=lambda: np.zeros(len(ACQUISITIONS)))
    eta: float = 1.0

    def probabilities(self) -> np.ndarray:
        return hedge_probabilities(self.gains, self.eta)


def hedge_probabilities(gains, eta: float = 1.0) -> np.ndarray:
    z = eta * np.asarray(gains, dtype=float)
    z = z - z.max()
    p = np.exp(z)
    return p / p.sum()
