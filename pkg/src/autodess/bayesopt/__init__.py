"""Gaussian-process Bayesian optimization over mixed spaces."""
from .acquisition import (ACQUISITIONS, KAPPA, HedgeState, acquisition, expected_improvement,
                          hedge_probabilities, lower_confidence_bound, probability_of_improvement)
from .gp import GpState, gp_fit, gp_posterior, log_marginal_likelihood, matern52
from .optimizer import (HedgeProposal, HistoryRow, OptimizeResult, candidate_pool, hedge_step,
                        hedge_update, optimize)
from .space import Boolean, Categorical, ConfigurationSpace, Integer, Real, encode

__all__ = [
    "ACQUISITIONS", "KAPPA", "Boolean", "Categorical", "ConfigurationSpace", "GpState",
    "HedgeProposal", "HedgeState", "HistoryRow", "Integer", "OptimizeResult", "Real",
    "acquisition", "candidate_pool", "encode", "expected_improvement", "gp_fit", "gp_posterior",
    "hedge_probabilities", "hedge_step", "hedge_update", "log_marginal_likelihood", "matern52",
    "lower_confidence_bound", "optimize", "probability_of_improvement",
]
