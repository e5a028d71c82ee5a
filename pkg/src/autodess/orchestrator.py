"""End-to-end three-stage search: features, per-classifier tuning, ensemble strategy."""
from __future__ import annotations

import json
import logging
import pickle
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .bayesopt import Boolean, Categorical, ConfigurationSpace, Integer, optimize
from .calibration import calibrate_out_of_fold
from .classifiers import KINDS, default_spec, fit_base, hpo_classifier
from .dataio import (DataError, Dataset, Preprocessor, RawTable, SplitSpec, fit_preprocessor,
                     preprocess, stratified_split)
from .ensemble import (STRATEGIES, CompetenceSet, EnsembleConfiguration, PoolMember,
                       StackedModel, build_competence_set, ensemble_predict, fit_stacked,
                       single_best)
from .ensemble.dispatch import GLOBAL_STRATEGIES
from .feateng import (IDENTITY, FeaturePipelineConfig, FittedFeaturePipeline,
                      fit_feature_pipeline, search_feature_pipeline)
from .metrics import accuracy, f1

logger = logging.getLogger(__name__)

REPORT_VERSION = "1"
K_RANGE = (3, 15)
DEFAULT_K = 7
METRICS = ("f1_macro", "accuracy")


@dataclass(frozen=True)
class BudgetPlan:
    feateng_evals: int = 10
    hpo_evals_per_classifier: int = 5
    ensemble_evals: int = 30
    wall_clock_cap: float | None = None

    def __post_init__(self):
        counts = (self.feateng_evals, self.hpo_evals_per_classifier, self.ensemble_evals)
        if any(int(c) != c or c < 0 for c in counts):
            raise ValueError("evaluation budgets must be nonnegative integers")
        if not any(counts):
            raise ValueError("at least one stage needs a positive budget")
        if self.wall_clock_cap is not None and not self.wall_clock_cap > 0:
            raise ValueError("wall_clock_cap must be positive")

    def to_dict(self) -> dict:
        return {"feateng_evals": self.feateng_evals,
                "hpo_evals_per_classifier": self.hpo_evals_per_classifier,
                "ensemble_evals": self.ensemble_evals, "wall_clock_cap": self.wall_clock_cap}


def score(metric: str, pred, truth) -> float:
    if metric == "f1_macro":
        return f1(pred, truth, "macro")
    if metric == "accuracy":
        return accuracy(pred, truth)
    raise ValueError(f"unknown metric {metric!r}")


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


@dataclass
class RunReport:
    seed: int
    pipeline: FeaturePipelineConfig
    pool: list[dict]
    ensemble: dict
    history: dict
    metrics: dict
    timings: dict
    data: dict = field(default_factory=dict)
    split: dict = field(default_factory=dict)
    plan: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"report_version": REPORT_VERSION, "seed": self.seed,
                "pipeline": self.pipeline.to_dict(), "pool": self.pool,
                "ensemble": self.ensemble, "history": self.history, "metrics": self.metrics,
                "timings": self.timings, "data": self.data, "split": self.split,
                "plan": self.plan, "warnings": self.warnings}

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, default=_jsonable)

    def chosen(self) -> dict:
        """The configuration fields that a run decides (no scores or timings)."""
        return {"pipeline": self.pipeline.to_dict(),
                "pool": [p["spec"] for p in self.pool],
                "ensemble": self.ensemble}


@dataclass
class AutoDessModel:
    """The fitted end product: feature pipeline, calibrated pool and ensemble rule."""

    features: FittedFeaturePipeline
    pool: list[PoolMember]
    competence: CompetenceSet
    config: EnsembleConfiguration
    stacked: StackedModel | None = None
    preprocessor: Preprocessor | None = None

    @property
    def member_names(self) -> list[str]:
        return [m.name for m in self.pool]

    def predict(self, X) -> np.ndarray:
        Z = self.features.transform(np.atleast_2d(np.asarray(X, dtype=float)))
        return ensemble_predict(self.config, self.pool, self.competence, Z, self.stacked)

    def predict_table(self, table) -> np.ndarray:
        if self.preprocessor is None:
            raise ValueError("model was fitted without a preprocessor")
        return self.predict(self.preprocessor.transform(table).X)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            pickle.dump(self, fh)

    @staticmethod
    def load(path) -> "AutoDessModel":
        with open(path, "rb") as fh:
            return pickle.load(fh)


@dataclass
class RunResult:
    report: RunReport
    model: AutoDessModel


# ------------------------------------------------------------------ stage 3

def ensemble_space(names: Sequence[str], strategies: Sequence[str], k_max: int,
                   force_dfp: bool | None) -> ConfigurationSpace:
    """Member booleans, strategy, k and the pruning flag; single-valued choices are left out."""
    dims = [Boolean(f"use_{n}") for n in names]
    if len(strategies) > 1:
        dims.append(Categorical("strategy", tuple(strategies)))
    lo, hi = K_RANGE
    hi = min(hi, k_max)
    if hi > lo:
        dims.append(Integer("k", lo, hi))
    if force_dfp is None:
        dims.append(Boolean("dfp"))
    return ConfigurationSpace(dims)


def repair(flags: Sequence[bool], cs: CompetenceSet) -> tuple[bool, ...]:
    """Turn an all-false member proposal into the globally best single member."""
    if any(flags):
        return tuple(bool(f) for f in flags)
    best = single_best(np.ones(cs.pool_size, dtype=bool), cs)
    return tuple(j == best for j in range(cs.pool_size))


class EnsembleObjective:
    """Validation loss of ensemble configurations, with cached stacked models."""

    def __init__(self, pool: list[PoolMember], cs: CompetenceSet, train: Dataset,
                 seed: int = 0, metric: str = "f1_macro", force_dfp: bool | None = None,
                 strategies: Sequence[str] = STRATEGIES):
        self.strategies = tuple(strategies)
        self.pool = pool
        self.cs = cs
        self.train = train
        self.seed = seed
        self.metric = metric
        self.force_dfp = force_dfp
        self.names = [m.name for m in pool]
        self._oof: dict[int, np.ndarray] = {}
        self._stacked: dict[tuple[int, ...], StackedModel] = {}
        self._cache: dict[tuple, float] = {}

    @property
    def k_max(self) -> int:
        return max(1, self.cs.n - 1)

    def config(self, point: dict) -> EnsembleConfiguration:
        flags = repair([bool(point[f"use_{n}"]) for n in self.names], self.cs)
        dfp = self.force_dfp if self.force_dfp is not None else bool(point.get("dfp", False))
        k = min(int(point.get("k", DEFAULT_K)), self.k_max)
        return EnsembleConfiguration(flags, point.get("strategy", self.strategies[0]), k, dfp)

    def stacked(self, cfg: EnsembleConfiguration) -> StackedModel | None:
        members = tuple(cfg.members)
        if cfg.strategy != "StackedGeneralization" or len(members) < 2:
            return None
        if members not in self._stacked:
            for j in members:
                if j not in self._oof:
                    self._oof[j] = self.pool[j].oof_proba(self.train, self.seed)
            self._stacked[members] = fit_stacked(cfg.member_flags, self.pool, self.train,
                                                 self.seed, oof=self._oof)
        return self._stacked[members]

    @staticmethod
    def key(cfg: EnsembleConfiguration) -> tuple:
        if len(cfg.members) == 1:
            return (cfg.member_flags,)
        if cfg.strategy in GLOBAL_STRATEGIES:
            return (cfg.member_flags, cfg.strategy)
        return (cfg.member_flags, cfg.strategy, cfg.k, cfg.dfp)

    def predict(self, cfg: EnsembleConfiguration) -> np.ndarray:
        return ensemble_predict(cfg, self.pool, self.cs, self.cs.X, self.stacked(cfg),
                                exclude_self=True)

    def loss(self, cfg: EnsembleConfiguration) -> float:
        key = self.key(cfg)
        if key not in self._cache:
            self._cache[key] = 1.0 - score(self.metric, self.predict(cfg), self.cs.y)
        return self._cache[key]

    def __call__(self, point: dict) -> float:
        return self.loss(self.config(point))


def objective_ensemble(cfg: EnsembleConfiguration, pool: list[PoolMember], cs: CompetenceSet,
                       val: Dataset, train: Dataset | None = None, seed: int = 0,
                       metric: str = "f1_macro") -> float:
    """1 - validation score of ``cfg`` (all-false member flags repaired first).

    ``val`` must be the data ``cs`` was built from; ``train`` is only needed
    for the stacked strategy.
    """
    if len(val.y) != cs.n or not np.array_equal(val.y, cs.y):
        raise ValueError("validation data differs from the competence set")
    obj = EnsembleObjective(pool, cs, train if train is not None else val, seed, metric)
    fixed = EnsembleConfiguration(repair(cfg.member_flags, cs), cfg.strategy,
                                  min(cfg.k, obj.k_max), cfg.dfp)
    return obj.loss(fixed)


def sweep_points(names: Sequence[str], strategies: Sequence[str], k: int,
                 force_dfp: bool | None) -> list[dict]:
    """All members on, one point per strategy, at fixed ``k`` and no pruning."""
    out = []
    for s in strategies:
        p: dict[str, Any] = {f"use_{n}": True for n in names}
        p.update(strategy=s, k=k)
        if force_dfp is None:
            p["dfp"] = False
        out.append(p)
    return out


def singleton_points(names: Sequence[str], strategy: str, k: int,
                     force_dfp: bool | None) -> list[dict]:
    """One point per pool member used alone (the strategy is then irrelevant)."""
    out = []
    for n in names:
        p: dict[str, Any] = {f"use_{m}": m == n for m in names}
        p.update(strategy=strategy, k=k)
        if force_dfp is None:
            p["dfp"] = False
        out.append(p)
    return out if len(names) > 1 else []


# ------------------------------------------------------------------ driver

def _history_rows(rows) -> list[dict]:
    return [r.to_dict() for r in rows]


def _tune_member(kind: str, train: Dataset, budget: int, seed: int,
                 deadline: float | None,
                 calibrate_all: bool = False) -> tuple[PoolMember, list, list[str]]:
    warnings = []
    spec, hist = hpo_classifier(default_spec(kind), train, budget, seed,
                                return_history=True, deadline=deadline)
    if spec.probabilistic and not calibrate_all:
        model = fit_base(spec, train, seed)
    else:
        try:
            model = calibrate_out_of_fold(spec, train, seed, folds=3)
        except ValueError as exc:
            warnings.append(f"{kind}: calibration skipped ({exc})")
            model = fit_base(spec, train, seed)
    return PoolMember(kind, spec, model), hist, warnings


def run_splits(train: Dataset, val: Dataset, test: Dataset, plan: BudgetPlan, seed: int = 0,
               kinds: Sequence[str] = KINDS, strategies: Sequence[str] | None = None,
               force_dfp: bool | None = None, metric: str = "f1_macro", threads: int = 1,
               preprocessor: Preprocessor | None = None,
               calibrate_all: bool = False) -> RunResult:
    """Run the three stages on a fixed train/validation/test split.

    The test split is read once, after every choice has been made.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    strategies = tuple(strategies or STRATEGIES)
    bad = set(strategies) - set(STRATEGIES)
    if bad:
        raise ValueError(f"unknown strategies {sorted(bad)}")
    kinds = tuple(kinds)
    if not kinds or len(set(kinds)) != len(kinds) or set(kinds) - set(KINDS):
        raise ValueError(f"pool kinds must be distinct members of {KINDS}")
    warnings: list[str] = []
    timings: dict[str, float] = {}
    t0 = time.monotonic()
    deadlines = _stage_deadlines(plan, len(kinds), t0)

    # stage 1
    t = time.monotonic()
    if plan.feateng_evals > 0:
        fs = search_feature_pipeline(train, plan.feateng_evals, seed, deadline=deadlines[0])
        fcfg, fhist = fs.config, _history_rows(fs.history)
    else:
        fcfg, fhist = IDENTITY, []
    features = fit_feature_pipeline(fcfg, train)
    warnings.extend(features.warnings)
    train_t, val_t = features.transform_dataset(train), features.transform_dataset(val)
    timings["feateng"] = time.monotonic() - t

    # stage 2
    t = time.monotonic()
    jobs = [(k, train_t, plan.hpo_evals_per_classifier, seed, deadlines[1], calibrate_all)
            for k in kinds]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            tuned = list(ex.map(lambda a: _tune_member(*a), jobs))
    else:
        tuned = [_tune_member(*a) for a in jobs]
    pool = [m for m, _, _ in tuned]
    for _, _, w in tuned:
        warnings.extend(w)
    hpo_hist = {m.name: _history_rows(h) for m, h, _ in tuned}
    timings["hpo"] = time.monotonic() - t

    # stage 3
    t = time.monotonic()
    cs = build_competence_set(pool, val_t, seed)
    obj = EnsembleObjective(pool, cs, train_t, seed, metric, force_dfp, strategies)
    names = obj.names
    sweep = sweep_points(names, strategies, min(DEFAULT_K, obj.k_max), force_dfp)
    if plan.ensemble_evals > 0:
        space = ensemble_space(names, strategies, obj.k_max, force_dfp)
        initial = sweep + singleton_points(names, strategies[0], min(DEFAULT_K, obj.k_max),
                                           force_dfp)
        res = optimize(space, obj, plan.ensemble_evals, seed=seed, initial=initial,
                       deadline=deadlines[2])
        best_point, ehist = res.best_config, _history_rows(res.history)
    else:
        losses = [obj(p) for p in sweep]
        best_point = sweep[int(np.argmin(losses))]
        ehist = [{"iteration": i, "config": p, "objective": v, "acquisition": "sweep"}
                 for i, (p, v) in enumerate(zip(sweep, losses))]
    cfg = obj.config(best_point)
    stacked = obj.stacked(cfg)
    val_pred = obj.predict(cfg)
    timings["ensemble"] = time.monotonic() - t

    # single best tuned member on validation, for comparison
    val_scores = np.array([score(metric, cs.preds[:, j], cs.y) for j in range(len(pool))])
    base_j = sorted(range(len(pool)), key=lambda j: (-val_scores[j], -cs.accuracy[j], j))[0]

    # the only read of the test split
    test_t = features.transform_dataset(test)
    test_pred = ensemble_predict(cfg, pool, cs, test_t.X, stacked)
    base_pred = pool[base_j].predict(test_t.X)
    timings["total"] = time.monotonic() - t0

    metrics = {
        "test": {"accuracy": accuracy(test_pred, test.y), "f1": f1(test_pred, test.y)},
        "validation": {"accuracy": accuracy(val_pred, val.y), "f1": f1(val_pred, val.y),
                       "objective": 1.0 - score(metric, val_pred, val.y)},
        "baseline": {"member": pool[base_j].name,
                     "validation_f1": f1(cs.preds[:, base_j], cs.y),
                     "test": {"accuracy": accuracy(base_pred, test.y),
                              "f1": f1(base_pred, test.y)}},
        "objective_metric": metric,
    }
    pool_report = [{"name": m.name, "spec": m.spec.to_dict(), "calibrated": m.calibrated,
                    "platt": [p.to_list() for p in m.model.params] if m.calibrated else None,
                    "validation_accuracy": float(cs.accuracy[j])}
                   for j, m in enumerate(pool)]
    report = RunReport(
        seed=seed, pipeline=fcfg, pool=pool_report, ensemble=cfg.to_dict(names),
        history={"feateng": fhist, "hpo": hpo_hist, "ensemble": ehist},
        metrics=metrics, timings=timings,
        data={"n": train.n + val.n + test.n, "d": train.d, "classes": train.class_count,
              "features_out": features.n_features_out},
        split={"train": train.n, "validation": val.n, "test": test.n},
        plan=plan.to_dict(), warnings=warnings)
    model = AutoDessModel(features, pool, cs, cfg, stacked, preprocessor)
    return RunResult(report, model)


def run_autodess(data: Dataset, plan: BudgetPlan, seed: int = 0, **kwargs) -> RunResult:
    """Split ``data`` 60/20/20 (stratified, seeded) and run all three stages."""
    train, val, test = stratified_split(data, SplitSpec(seed=seed))
    result = run_splits(train, val, test, plan, seed, **kwargs)
    result.report.data["test_rows"] = [int(i) for i in test.index]
    return result


def run_table(table: RawTable, label: str, plan: BudgetPlan, seed: int = 0,
              **kwargs) -> RunResult:
    """Split a raw table, fit preprocessing on the training rows only, then run."""
    full = preprocess(table, label)
    parts = stratified_split(full, SplitSpec(seed=seed))
    pre = fit_preprocessor(table.take(parts[0].index), label)
    if len(pre.classes) != full.class_count:
        raise DataError("training rows do not cover every class")
    train, val, test = (_encode_rows(pre, table, p.index) for p in parts)
    result = run_splits(train, val, test, plan, seed, preprocessor=pre, **kwargs)
    result.report.data["test_rows"] = [int(i) for i in test.index]
    return result


def _encode_rows(pre: Preprocessor, table: RawTable, rows) -> Dataset:
    d = pre.transform(table.take(rows))
    return Dataset(d.X, d.y, d.class_count, d.feature_names, rows)


def _stage_deadlines(plan: BudgetPlan, n_kinds: int, start: float) -> list[float | None]:
    """Split the wall-clock cap across stages in proportion to their evaluation counts."""
    if plan.wall_clock_cap is None:
        return [None, None, None]
    weights = np.array([plan.feateng_evals, plan.hpo_evals_per_classifier * n_kinds,
                        plan.ensemble_evals], dtype=float)
    ends = np.cumsum(weights / weights.sum()) * plan.wall_clock_cap
    return [start + float(e) if w > 0 else None for e, w in zip(ends, weights)]
