"""Figures for comparison tables and search histories (file output only)."""
from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def score_boxplots(scores: Mapping[str, np.ndarray], path, title: str = "",
                   masks: Mapping[str, np.ndarray] | None = None) -> Path:
    """One box per method; rows flagged in ``masks`` are left out of that box."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 3.2))
        names = list(scores)
        data = []
        for n in names:
            v = np.asarray(scores[n], dtype=float)
            if masks is not None and n in masks:
                v = v[~np.asarray(masks[n], dtype=bool)]
            data.append(v)
        ax.boxplot(data, showmeans=True)
        ax.set_xticks(range(1, len(names) + 1), names, rotation=20)
        ax.set_ylabel("score")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def paired_scatter(ours: np.ndarray, others: Mapping[str, np.ndarray], path,
                   label: str = "Ours", title: str = "") -> Path:
    """Per-dataset scores of ``label`` against each other method, with the diagonal."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 4.0))
        for name, v in others.items():
            ax.scatter(v, ours, s=12, label=name, alpha=0.8)
        ax.plot([0, 1], [0, 1], color="0.5", lw=0.8, ls="--")
        ax.set_xlim(0, 1.02)
        ax.set_ylim(0, 1.02)
        ax.set_xlabel("other method")
        ax.set_ylabel(label)
        ax.legend(frameon=False, loc="lower right")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def best_so_far(values) -> np.ndarray:
    return np.minimum.accumulate(np.asarray(values, dtype=float))


def search_history(report: Mapping, path) -> Path:
    """Best-so-far objective per evaluation for stage 1 and stage 3, and each tuned member."""
    hist = report["history"]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 3, figsize=(9.0, 2.8))
        panels = [("feature pipeline", {"surrogate": hist.get("feateng", [])}),
                  ("classifier tuning", hist.get("hpo", {})),
                  ("ensemble", {"validation": hist.get("ensemble", [])})]
        for ax, (title, series) in zip(axes, panels):
            for name, rows in series.items():
                if rows:
                    y = best_so_far([r["objective"] for r in rows])
                    ax.step(np.arange(1, len(y) + 1), y, where="post", label=name)
            ax.set_title(title)
            ax.set_xlabel("evaluation")
            if len(series) > 1:
                ax.legend(frameon=False, fontsize=6)
        axes[0].set_ylabel("best objective")
        return _save(fig, path)
