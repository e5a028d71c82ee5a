"""Sequential GP optimization driven by the EI/LCB/PI hedge."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .acquisition import ACQUISITIONS, KAPPA, HedgeState, acquisition
from .gp import GpState, gp_fit
from .space import ConfigurationSpace

logger = logging.getLogger(__name__)

N_UNIFORM_CANDIDATES = 500
N_LOCAL_CANDIDATES = 20
LOCAL_SCALE = 0.1


@dataclass
class HistoryRow:
    iteration: int
    config: dict[str, Any]
    objective: float
    acquisition: str
    failed: bool = False

    def to_dict(self) -> dict:
        return {"iteration": self.iteration, "config": self.config,
                "objective": self.objective, "acquisition": self.acquisition}


@dataclass
class OptimizeResult:
    best_config: dict[str, Any]
    best_value: float
    history: list[HistoryRow] = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([h.objective for h in self.history])


@dataclass
class HedgeProposal:
    config: dict[str, Any]
    acquisition: str
    candidates: np.ndarray  # one encoded proposal per acquisition
    probabilities: np.ndarray


def candidate_pool(space: ConfigurationSpace, rng: np.random.Generator,
                   best_enc: np.ndarray | None,
                   observed: np.ndarray | None = None) -> np.ndarray:
    """Encoded candidates: uniform samples plus perturbations of the incumbent.

    Candidates that re-encode to an already observed point are dropped while
    any unobserved candidate remains.
    """
    pts = [space.encode(space.sample(rng)) for _ in range(N_UNIFORM_CANDIDATES)]
    if best_enc is not None:
        noise = rng.normal(0.0, LOCAL_SCALE, size=(N_LOCAL_CANDIDATES, space.width))
        pts.extend(space.encode(space.decode(best_enc + e)) for e in noise)
    C = np.unique(np.round(np.asarray(pts), 12), axis=0)
    if observed is not None and len(observed):
        seen = {tuple(np.round(o, 12)) for o in observed}
        keep = np.array([tuple(c) not in seen for c in C])
        if keep.any():
            C = C[keep]
    return C


def hedge_step(g: GpState, h: HedgeState, space: ConfigurationSpace,
               rng: np.random.Generator, kappa: float = KAPPA) -> HedgeProposal:
    """Optimize each acquisition over a candidate pool and pick one proposal.

    The proposal is drawn with probability softmax(eta * gains). Gains are
    updated separately by :func:`hedge_update` once the objective has been
    observed and the GP refitted.
    """
    best_idx = int(np.argmin(g.y))
    C = candidate_pool(space, rng, g.X[best_idx], g.X)
    mu, sd = g.predict(C)
    best = float(g.y[best_idx])
    props = np.array([C[int(np.argmin(acquisition(a, mu, sd, best, kappa)))] for a in ACQUISITIONS])
    probs = h.probabilities()
    choice = int(rng.choice(len(ACQUISITIONS), p=probs))
    return HedgeProposal(space.decode(props[choice]), ACQUISITIONS[choice], props, probs)


def hedge_update(h: HedgeState, g_refit: GpState, proposal: HedgeProposal) -> HedgeState:
    """Add each acquisition's reward, minus the refitted posterior mean at its proposal."""
    mu, _ = g_refit.predict(proposal.candidates)
    return HedgeState(h.gains - mu, h.eta)


def optimize(space: ConfigurationSpace, objective: Callable[[dict], float], budget: int,
             seed: int = 0, n_init: int | None = None,
             initial: Sequence[dict] = (), eta: float = 1.0, kappa: float = KAPPA,
             deadline: float | None = None, failure_value: float = 1.0) -> OptimizeResult:
    """Minimize ``objective`` over ``space`` within ``budget`` evaluations.

    ``initial`` configurations are evaluated first, then random samples fill
    the initial design of ``max(5, len(space))`` points, then the hedge takes
    over. A raising objective scores the worst value seen so far. With a
    ``deadline`` (``time.monotonic`` seconds) the loop stops early once it
    passes, after at least one evaluation.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    rng = np.random.default_rng(seed)
    n_init = max(5, len(space)) if n_init is None else n_init
    hedge = HedgeState(eta=eta)
    X: list[np.ndarray] = []
    y: list[float] = []
    history: list[HistoryRow] = []
    gp: GpState | None = None

    def evaluate(cfg, acq):
        failed = False
        try:
            val = float(objective(cfg))
            if not math.isfinite(val):
                raise ValueError("non-finite objective")
        except Exception as exc:  # noqa: BLE001 - failures are scored, never fatal
            logger.warning("objective failed at %s: %s", cfg, exc)
            val = max(y) if y else failure_value
            failed = True
        X.append(space.encode(cfg))
        y.append(val)
        history.append(HistoryRow(len(history), dict(cfg), val, acq, failed))

    queue = [dict(c) for c in initial]
    for t in range(budget):
        if deadline is not None and history and time.monotonic() > deadline:
            break
        if queue:
            evaluate(queue.pop(0), "initial")
        elif t < n_init or gp is None:
            evaluate(space.sample(rng), "random")
        else:
            prop = hedge_step(gp, hedge, space, rng, kappa)
            evaluate(prop.config, prop.acquisition)
            gp = gp_fit(np.array(X), np.array(y))
            hedge = hedge_update(hedge, gp, prop)
            continue
        if len(history) >= min(n_init, budget):
            gp = gp_fit(np.array(X), np.array(y))

    best = int(np.argmin(y))
    return OptimizeResult(history[best].config, y[best], history)
