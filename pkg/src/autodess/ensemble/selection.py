"""Frienemy pruning, per-classifier local competence and dynamic selection rules."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .competence import CompetenceSet, RegionOfCompetence

DCS_MEASURES = ("OLA", "LCA", "MCB", "Rank", "APriori", "APosteriori")
DES_RULES = ("KNORA_E", "KNORA_U", "DES_KNN", "DES_CLUSTERING")
MCB_MATCH = 0.7


def _flags(flags, m: int) -> np.ndarray:
    f = np.asarray(flags, dtype=bool)
    if f.shape != (m,):
        raise ValueError(f"expected {m} flags, got {f.shape}")
    if not f.any():
        raise ValueError("at least one classifier must be flagged")
    return f


def dfp_prune(pool_flags, cs: CompetenceSet, roc: RegionOfCompetence) -> np.ndarray:
    """Keep flagged classifiers that get both samples of some cross-label roc pair right.

    Falls back to the input flags when nobody survives.
    """
    flags = _flags(pool_flags, cs.pool_size)
    correct = cs.correct[roc.indices]
    labels = cs.y[roc.indices]
    survive = np.zeros(cs.pool_size, dtype=bool)
    for j in np.flatnonzero(flags):
        # a cross-label pair exists among j's correct samples iff they span two labels
        survive[j] = len(np.unique(labels[correct[:, j]])) >= 2
    return survive if survive.any() else flags.copy()


def query_predictions(cs: CompetenceSet, query) -> np.ndarray:
    if cs.pool is None:
        raise ValueError("competence set carries no pool; pass query_preds")
    q = np.asarray(query, dtype=float)[None, :]
    return np.array([int(m.predict(q)[0]) for m in cs.pool])


def competences(measure: str, cs: CompetenceSet, roc: RegionOfCompetence,
                qpred: np.ndarray) -> np.ndarray:
    """Competence of every pool member for one query (vectorized over members)."""
    idx = roc.indices
    C = cs.correct[idx]  # k x M
    if measure == "OLA":
        return C.mean(axis=0)
    same = cs.y[idx][:, None] == qpred[None, :]  # roc label equals member's query prediction
    if measure == "LCA":
        den = same.sum(axis=0)
        return np.where(den > 0, (C & same).sum(axis=0) / np.maximum(den, 1), 0.0)
    if measure == "MCB":
        match = (cs.preds[idx] == qpred[None, :]).mean(axis=1) >= MCB_MATCH
        return C[match].mean(axis=0) if match.any() else C.mean(axis=0)
    if measure == "Rank":
        return np.cumprod(C, axis=0).sum(axis=0).astype(float)
    if measure in ("APriori", "APosteriori"):
        w = 1.0 / np.arange(1, len(idx) + 1)
        p_true = cs.proba[idx, :, :][np.arange(len(idx)), :, cs.y[idx]]  # k x M
        if measure == "APriori":
            return (w[:, None] * p_true).sum(axis=0) / w.sum()
        W = w[:, None] * same
        den = W.sum(axis=0)
        return np.where(den > 0, (W * p_true).sum(axis=0) / np.where(den > 0, den, 1.0), 0.0)
    raise ValueError(f"unknown competence measure {measure!r}")


def dcs_competence(measure: str, j: int, cs: CompetenceSet, roc: RegionOfCompetence,
                   query, query_preds: np.ndarray | None = None) -> float:
    """Local competence of classifier ``j`` for ``query``.

    ``query_preds`` holds every pool member's label for the query; it is
    computed from ``cs.pool`` when omitted.
    """
    if measure not in DCS_MEASURES:
        raise ValueError(f"unknown competence measure {measure!r}")
    qp = query_predictions(cs, query) if query_preds is None else np.asarray(query_preds)
    return float(competences(measure, cs, roc, qp)[j])


def rank_members(candidates: Sequence[int], primary, global_acc) -> list[int]:
    """Candidates ordered by primary score, then global accuracy (both descending), then index."""
    return sorted(candidates, key=lambda j: (-primary[j], -global_acc[j], j))


def des_select(strategy: str, flags, cs: CompetenceSet, roc: RegionOfCompetence,
               query=None, exclude: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Selected flags and vote weights for one query.

    ``exclude`` drops a competence sample from cluster statistics (used when
    the query itself belongs to the competence set).
    """
    flags = _flags(flags, cs.pool_size)
    cand = np.flatnonzero(flags)
    C = cs.correct[roc.indices]
    gacc = cs.accuracy
    sel = np.zeros(cs.pool_size, dtype=bool)
    weights = np.zeros(cs.pool_size)
    if strategy == "KNORA_E":
        for kk in range(roc.k, 0, -1):
            ok = flags & C[:kk].all(axis=0)
            if ok.any():
                sel = ok
                break
        else:
            sel = flags.copy()
        weights[sel] = 1.0
    elif strategy == "KNORA_U":
        counts = np.where(flags, C.sum(axis=0), 0).astype(float)
        if counts.sum() == 0:
            counts = flags.astype(float)
        weights = counts
        sel = counts > 0
    elif strategy == "DES_KNN":
        acc = C.mean(axis=0)
        n = len(cand)
        top = rank_members(cand.tolist(), acc, gacc)[:math.ceil(n / 2)]
        wrong = ~C[:, top]
        if len(top) > 1:
            df = (wrong[:, :, None] & wrong[:, None, :]).mean(axis=0)
            np.fill_diagonal(df, 0.0)
            score = df.sum(axis=1) / (len(top) - 1)
        else:
            score = np.zeros(1)
        dfs = dict(zip(top, score))
        keep = sorted(top, key=lambda j: (dfs[j], -acc[j], -gacc[j], j))[:math.ceil(n / 3)]
        sel[keep] = True
        weights[sel] = 1.0
    elif strategy == "DES_CLUSTERING":
        if query is None:
            raise ValueError("DES_CLUSTERING needs the query vector")
        centers, assign = cs.clusters()
        q = np.asarray(query, dtype=float)
        c = int(np.argmin(((centers - q[None, :]) ** 2).sum(axis=1)))
        members = assign == c
        if exclude is not None:
            members[exclude] = False
        if not members.any():
            members = np.ones(cs.n, dtype=bool)
            if exclude is not None and cs.n > 1:
                members[exclude] = False
        acc = cs.correct[members].mean(axis=0)
        keep = rank_members(cand.tolist(), acc, gacc)[:math.ceil(len(cand) / 2)]
        sel[keep] = True
        weights[sel] = 1.0
    else:
        raise ValueError(f"unknown selection rule {strategy!r}")
    return sel, weights


def majority_vote(predictions, weights=None, n_classes: int | None = None) -> int:
    """Label with the largest summed weight; ties go to the lowest label."""
    p = np.asarray(predictions, dtype=int)
    if p.size == 0:
        raise ValueError("no predictions to vote on")
    w = np.ones(len(p)) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != p.shape:
        raise ValueError("predictions and weights differ in length")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if not w.any():
        w = np.ones(len(p))
    tally = np.bincount(p, weights=w, minlength=n_classes or 0)
    return int(np.argmax(tally))
