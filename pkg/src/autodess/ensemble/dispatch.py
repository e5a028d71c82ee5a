"""Ensemble configurations and the per-query prediction dispatcher."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .competence import CompetenceSet, RegionOfCompetence, neighbor_order
from .selection import (DCS_MEASURES, DES_RULES, competences, des_select, dfp_prune,
                        majority_vote, rank_members)
from .stacking import StackedModel

STRATEGIES = ("SingleBest", "StaticSelection", "StackedGeneralization",
              *DCS_MEASURES, *DES_RULES)
# strategies that never look at a region of competence
GLOBAL_STRATEGIES = ("SingleBest", "StaticSelection", "StackedGeneralization")


@dataclass(frozen=True)
class EnsembleConfiguration:
    member_flags: tuple[bool, ...]
    strategy: str
    k: int = 7
    dfp: bool = False

    def __post_init__(self):
        object.__setattr__(self, "member_flags", tuple(bool(f) for f in self.member_flags))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "dfp", bool(self.dfp))

    @property
    def members(self) -> list[int]:
        return [j for j, f in enumerate(self.member_flags) if f]

    def validate(self, pool_size: int, n_competence: int) -> None:
        if len(self.member_flags) != pool_size:
            raise ValueError(f"{len(self.member_flags)} flags for a pool of {pool_size}")
        if not any(self.member_flags):
            raise ValueError("no ensemble member selected")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if not 1 <= self.k <= n_competence:
            raise ValueError(f"k={self.k} outside [1, {n_competence}]")

    def to_dict(self, names: Sequence[str] | None = None) -> dict:
        names = names or [str(j) for j in range(len(self.member_flags))]
        return {"members": [names[j] for j in self.members], "strategy": self.strategy,
                "k": self.k, "dfp": self.dfp}

    @classmethod
    def from_dict(cls, d: dict, names: Sequence[str]) -> "EnsembleConfiguration":
        chosen = set(d["members"])
        unknown = chosen - set(names)
        if unknown:
            raise ValueError(f"unknown members {sorted(unknown)}")
        return cls(tuple(n in chosen for n in names), d["strategy"], d["k"], d["dfp"])


def single_best(flags, cs: CompetenceSet) -> int:
    cand = np.flatnonzero(np.asarray(flags, dtype=bool))
    return rank_members(cand.tolist(), cs.accuracy, np.zeros(cs.pool_size))[0]


def ensemble_predict(cfg: EnsembleConfiguration, pool: Sequence, cs: CompetenceSet, X,
                     stacked: StackedModel | None = None,
                     exclude_self: bool = False) -> np.ndarray:
    """Predict labels for the rows of ``X`` under configuration ``cfg``.

    With ``exclude_self`` the rows of ``X`` are the competence samples
    themselves, in order, and each row is left out of its own region of
    competence and cluster statistics.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    limit = cs.n - 1 if exclude_self else cs.n
    cfg.validate(len(pool), max(limit, 1))
    flags = np.asarray(cfg.member_flags)
    members = cfg.members
    if exclude_self:
        if len(X) != cs.n:
            raise ValueError("exclude_self requires X to be the competence set")
        qpreds = cs.preds
    else:
        qpreds = np.column_stack([m.predict(X) for m in pool])

    if len(members) == 1:
        return qpreds[:, members[0]].copy()
    s = cfg.strategy
    if s == "SingleBest":
        return qpreds[:, single_best(flags, cs)].copy()
    if s == "StaticSelection":
        return np.array([majority_vote(row[members], n_classes=cs.n_classes) for row in qpreds])
    if s == "StackedGeneralization":
        if stacked is None or sorted(stacked.members) != members:
            raise ValueError("stacked model missing or fitted for different members")
        return stacked.predict(X)

    k = min(cfg.k, limit)
    order, dist = neighbor_order(cs, X)
    out = np.empty(len(X), dtype=int)
    gacc = cs.accuracy
    for i in range(len(X)):
        o, d = order[i], dist[i]
        if exclude_self:
            keep = o != i
            o, d = o[keep], d[keep]
        roc = RegionOfCompetence(o[:k], d[:k])
        active = dfp_prune(flags, cs, roc) if cfg.dfp else flags
        if s in DCS_MEASURES:
            comp = competences(s, cs, roc, qpreds[i])
            j = rank_members(np.flatnonzero(active).tolist(), comp, gacc)[0]
            out[i] = qpreds[i, j]
        else:
            sel, w = des_select(s, active, cs, roc, X[i], exclude=i if exclude_self else None)
            out[i] = majority_vote(qpreds[i, sel], w[sel], cs.n_classes)
    return out
