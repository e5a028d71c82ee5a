import json

import numpy as np
import pytest

from autodess.classifiers import KINDS, default_spec, fit_base
from autodess.dataio import RawTable, SplitSpec, load_table, stratified_split
from autodess.ensemble import (STRATEGIES, EnsembleConfiguration, build_competence_set,
                               ensemble_predict)
from autodess.orchestrator import (BudgetPlan, EnsembleObjective, ensemble_space,
                                   objective_ensemble, repair, run_autodess, run_splits,
                                   run_table)
from autodess.synthetic import blobs, imbalanced_gaussians
from test_ensemble import pool_on

SMALL = BudgetPlan(2, 1, 6)


def f1_from_confusion(pred, truth, K):
    M = [[0] * K for _ in range(K)]
    for p, t in zip(pred, truth):
        M[t][p] += 1
    scores = []
    for c in range(K):
        tp = M[c][c]
        fp = sum(M[r][c] for r in range(K)) - tp
        fn = sum(M[c]) - tp
        scores.append(0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn))
    return sum(scores) / K


@pytest.fixture(scope="module")
def blob_run():
    return run_autodess(blobs(200, seed=3), SMALL, seed=0)


@pytest.fixture
def small_pool(three_class):
    train, val, test = stratified_split(three_class, SplitSpec(seed=2))
    pool = pool_on(train, ["knn", "gaussian_nb", "decision_tree", "logistic_regression"])
    return train, val, pool, build_competence_set(pool, val)


# ------------------------------------------------------------------ plan

def test_budget_plan_validation():
    with pytest.raises(ValueError):
        BudgetPlan(0, 0, 0)
    with pytest.raises(ValueError):
        BudgetPlan(-1, 1, 1)
    with pytest.raises(ValueError):
        BudgetPlan(1, 1, 1, wall_clock_cap=0)
    assert BudgetPlan().to_dict()["ensemble_evals"] == 30


# ------------------------------------------------------------------ end to end

def test_separable_blobs_are_perfect(blob_run):
    m = blob_run.report.metrics
    assert m["test"]["accuracy"] == 1.0
    assert m["validation"]["accuracy"] == 1.0


def test_singleton_pool_equals_that_classifier():
    data = imbalanced_gaussians(seed=1)
    res = run_autodess(data, BudgetPlan(0, 0, 13), seed=1, kinds=["knn"])
    train, _, test = stratified_split(data, SplitSpec(seed=1))
    pred = fit_base(default_spec("knn"), train, 1).predict(test.X)
    m = res.report.metrics["test"]
    assert m["accuracy"] == pytest.approx(np.mean(pred == test.y))
    assert m["f1"] == pytest.approx(f1_from_confusion(pred, test.y, 2))
    assert res.report.ensemble["members"] == ["knn"]


def test_report_json_shape(blob_run):
    d = json.loads(blob_run.report.to_json())
    for key in ("report_version", "seed", "pipeline", "pool", "ensemble", "history",
                "metrics", "timings"):
        assert key in d
    assert set(d["ensemble"]) == {"members", "strategy", "k", "dfp"}
    names = {p["name"] for p in d["pool"]}
    assert set(d["ensemble"]["members"]) <= names == set(KINDS)
    for split in ("test", "validation"):
        for v in (d["metrics"][split]["accuracy"], d["metrics"][split]["f1"]):
            assert 0 <= v <= 1


def test_history_lengths_match_budget(blob_run):
    h = blob_run.report.history
    assert len(h["feateng"]) == SMALL.feateng_evals
    assert all(len(v) == SMALL.hpo_evals_per_classifier for v in h["hpo"].values())
    assert len(h["ensemble"]) == SMALL.ensemble_evals


def test_zero_budgets_use_stage_defaults():
    res = run_autodess(blobs(120, seed=4), BudgetPlan(0, 0, 1), seed=0)
    r = res.report
    assert r.pipeline.to_dict()["scaler"] == {"name": "none"}
    assert all(p["spec"] == default_spec(p["name"]).to_dict() for p in r.pool)
    res = run_autodess(blobs(120, seed=4), BudgetPlan(1, 0, 0), seed=0)
    assert len(res.report.history["ensemble"]) == len(STRATEGIES)


def test_reproducible_except_timings():
    data = imbalanced_gaussians(200, seed=2)
    a = run_autodess(data, SMALL, seed=5).report.to_dict()
    b = run_autodess(data, SMALL, seed=5).report.to_dict()
    a.pop("timings"), b.pop("timings")
    assert a == b


def test_threads_do_not_change_result():
    data = imbalanced_gaussians(200, seed=3)
    a = run_autodess(data, SMALL, seed=1, threads=1).report.chosen()
    b = run_autodess(data, SMALL, seed=1, threads=3).report.chosen()
    assert a == b


def test_more_ensemble_evals_never_worse():
    data = imbalanced_gaussians(seed=6)
    objs = [run_autodess(data, BudgetPlan(1, 1, n), seed=6).report.metrics["validation"]["objective"]
            for n in (4, 12, 24)]
    assert objs[0] >= objs[1] >= objs[2]


def test_test_labels_do_not_steer_choices():
    data = imbalanced_gaussians(200, seed=8)
    train, val, test = stratified_split(data, SplitSpec(seed=8))
    a = run_splits(train, val, test, SMALL, seed=8).report
    shuffled = test.subset(np.arange(test.n))
    shuffled.y = np.random.default_rng(0).permutation(test.y)
    b = run_splits(train, val, shuffled, SMALL, seed=8).report
    assert a.chosen() == b.chosen()


def test_restricted_strategies_and_forced_pruning():
    res = run_autodess(imbalanced_gaussians(200, seed=9), BudgetPlan(1, 1, 5), seed=0,
                       strategies=["StackedGeneralization"], force_dfp=True)
    assert res.report.ensemble["strategy"] == "StackedGeneralization"
    assert res.report.ensemble["dfp"] is True


def test_bad_arguments():
    data = blobs(100, seed=0)
    with pytest.raises(ValueError):
        run_autodess(data, SMALL, strategies=["Oracle"])
    with pytest.raises(ValueError):
        run_autodess(data, SMALL, kinds=["knn", "knn"])
    with pytest.raises(ValueError):
        run_autodess(data, SMALL, metric="auc")


def test_wall_clock_cap_truncates():
    res = run_autodess(imbalanced_gaussians(200, seed=1), BudgetPlan(50, 50, 50, 3.0), seed=0)
    assert res.report.timings["total"] < 60
    assert len(res.report.history["feateng"]) < 50


def test_model_roundtrip(blob_run, tmp_path):
    path = tmp_path / "m.pkl"
    blob_run.model.save(path)
    X = np.random.default_rng(0).normal(size=(10, 2)) * 5
    from autodess.orchestrator import AutoDessModel
    assert np.array_equal(AutoDessModel.load(path).predict(X), blob_run.model.predict(X))


def test_run_table_with_categorical_and_missing(write_csv):
    rng = np.random.default_rng(0)
    lines = ["x,color,label"]
    for i in range(120):
        lab = i % 2
        x = "?" if i % 17 == 0 else f"{rng.normal() + 3 * lab:.4f}"
        color = ["red", "blue"][lab] if rng.random() < 0.8 else "green"
        lines.append(f"{x},{color},{'yes' if lab else 'no'}")
    table = load_table(write_csv("\n".join(lines) + "\n"), "label")
    res = run_table(table, "label", BudgetPlan(1, 1, 3), seed=0)
    assert res.report.data["classes"] == 2 and res.report.data["d"] == 4
    assert res.model.predict_table(table).shape == (120,)


# ------------------------------------------------------------------ stage-3 objective

def test_perfect_configuration_scores_zero(separable):
    pool = pool_on(separable, ["logistic_regression", "gaussian_nb"])
    cs = build_competence_set(pool, separable)
    cfg = EnsembleConfiguration((True, True), "StaticSelection")
    assert objective_ensemble(cfg, pool, cs, separable) == 0.0


def test_all_false_repaired_to_single_best(small_pool):
    train, val, pool, cs = small_pool
    j = int(np.argmax(cs.accuracy))
    got = objective_ensemble(EnsembleConfiguration((False,) * 4, "OLA"), pool, cs, val, train)
    assert got == pytest.approx(1 - f1_from_confusion(cs.preds[:, j], val.y, 3))
    assert repair((False,) * 4, cs) == tuple(i == j for i in range(4))


@pytest.mark.parametrize("seed", range(6))
def test_objective_matches_confusion_oracle(seed, small_pool):
    train, val, pool, cs = small_pool
    rng = np.random.default_rng(seed)
    flags = tuple(bool(b) for b in rng.random(4) < 0.6) or (True,)
    cfg = EnsembleConfiguration(repair(flags, cs), STRATEGIES[seed * 2 % 13], 5, bool(seed % 2))
    obj = EnsembleObjective(pool, cs, train, 0)
    pred = ensemble_predict(cfg, pool, cs, val.X, obj.stacked(cfg), exclude_self=True)
    expected = 1 - f1_from_confusion(pred, val.y, 3)
    assert objective_ensemble(cfg, pool, cs, val, train) == pytest.approx(expected, abs=1e-12)


def test_objective_rejects_foreign_validation(small_pool, separable):
    train, val, pool, cs = small_pool
    with pytest.raises(ValueError):
        objective_ensemble(EnsembleConfiguration((True,) * 4, "OLA"), pool, cs, separable)


def test_ensemble_space_shape():
    s = ensemble_space(["a", "b"], STRATEGIES, 40, None)
    assert s.names == ["use_a", "use_b", "strategy", "k", "dfp"]
    s = ensemble_space(["a", "b"], ["KNORA_U"], 3, False)
    assert s.names == ["use_a", "use_b"]
