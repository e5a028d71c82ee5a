"""Recompute the bundled comparison table's summary statistics and check them."""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .metrics import (ComparisonSummary, aggregate_comparison, load_comparison,
                      load_failure_mask, wilcoxon_signed_rank)

OURS = "Ours"
TABLE_FILE = "benchmark_scores.csv"
MASK_FILE = "benchmark_failures.csv"


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    target: float | None
    tolerance: float | None
    passed: bool
    note: str = ""


def fixture_paths(directory=None) -> tuple[Path, Path]:
    base = Path(directory) if directory else Path(str(resources.files("autodess") / "data"))
    table, mask = base / TABLE_FILE, base / MASK_FILE
    for p in (table, mask):
        if not p.is_file():
            raise FileNotFoundError(f"fixture missing: {p}")
    return table, mask


def _near(name, value, target, tol, note=""):
    return Check(name, value, target, tol, abs(value - target) <= tol, note)


@dataclass
class Reproduction:
    summaries: dict[str, ComparisonSummary]
    wilcoxon: dict[tuple[str, str], object]
    checks: list[Check]
    use_mask: bool
    # means under the opposite masking policy, for discrepancy reports
    alternate_means: dict[str, dict[str, float]]


def reproduce(directory=None, use_mask: bool = True) -> Reproduction:
    table_path, mask_path = fixture_paths(directory)
    table = load_comparison(table_path)
    rows, mask = load_failure_mask(mask_path)
    if rows != table.rows:
        raise ValueError("failure mask rows do not match the score table")
    summaries, plain, tests = {}, {}, {}
    for metric in ("acc", "f1"):
        cols = table.metric(metric)
        summaries[metric] = aggregate_comparison(cols, mask if use_mask else None)
        plain[metric] = aggregate_comparison(cols, None if use_mask else mask).means
        for other in cols:
            if other != OURS:
                tests[(metric, other)] = wilcoxon_signed_rank(cols[OURS], cols[other])

    acc, f1s = summaries["acc"], summaries["f1"]
    best_rank = min(f1s.mean_ranks.values())
    checks = [
        _near("mean accuracy (Ours)", acc.means[OURS], 0.83804, 5e-4),
        _near("mean F1 (Ours)", f1s.means[OURS], 0.77722, 5e-4),
        Check("F1 mean rank best (Ours)", f1s.mean_ranks[OURS], best_rank, 0.0,
              f1s.mean_ranks[OURS] == best_rank),
        _near("F1 mean rank (Ours)", f1s.mean_ranks[OURS], 2.04762, 0.05),
        _near("Wilcoxon z F1 Ours vs TPOT", tests[("f1", "TPOT")].z, 3.315, 0.15),
        Check("Wilcoxon p F1 Ours vs TPOT <= 0.005", tests[("f1", "TPOT")].p_value, 0.005,
              None, tests[("f1", "TPOT")].p_value <= 0.005),
        _near("Wilcoxon z F1 Ours vs mljarsupervised", tests[("f1", "mljarsupervised")].z,
              2.777, 0.15),
        _near("Wilcoxon z accuracy Ours vs auto-sklearn",
              tests[("acc", "auto-sklearn")].z, 1.83, 0.15),
        Check("Wilcoxon p accuracy Ours vs auto-sklearn > 0.05",
              tests[("acc", "auto-sklearn")].p_value, 0.05, None,
              tests[("acc", "auto-sklearn")].p_value > 0.05),
    ]
    return Reproduction(summaries, tests, checks, use_mask, plain)


def mask_discrepancies(rep: Reproduction) -> list[tuple[str, str, float, float]]:
    """(metric, method, reported mean, mean under the other masking policy) where they differ."""
    out = []
    for metric, summ in rep.summaries.items():
        for m, v in summ.means.items():
            u = rep.alternate_means[metric][m]
            if not np.isclose(u, v, rtol=0, atol=1e-12):
                out.append((metric, m, v, u))
    return out
