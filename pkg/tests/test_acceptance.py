"""Acceptance criteria, each run at its stated tolerance and time limit."""
import math
import time

import numpy as np
import pytest

import oracles
from autodess.bayesopt import ConfigurationSpace, Real, gp_fit, gp_posterior, optimize
from autodess.calibration import calibrate_out_of_fold, fit_platt, platt_prob
from autodess.classifiers import default_spec, fit_base
from autodess.dataio import SplitSpec, stratified_split
from autodess.ensemble import competences, des_select, dfp_prune, region_of_competence
from autodess.metrics import (aggregate_comparison, load_comparison, load_failure_mask,
                              wilcoxon_signed_rank)
from autodess.orchestrator import BudgetPlan, run_autodess, run_splits
from autodess.reproduction import OURS, fixture_paths
from autodess.synthetic import blobs, imbalanced_gaussians

SEEDS = range(10)
PLAN = BudgetPlan()  # the command-line defaults


def fixture_table():
    table_path, mask_path = fixture_paths()
    _, mask = load_failure_mask(mask_path)
    return load_comparison(table_path), mask


def test_criterion_1_comparison_means_and_ranks(criterion):
    t0 = time.perf_counter()
    table, mask = fixture_table()
    acc = aggregate_comparison(table.metric("acc"), mask)
    f1 = aggregate_comparison(table.metric("f1"), mask)
    rank = f1.mean_ranks[OURS]
    ok = (abs(acc.means[OURS] - 0.83804) <= 5e-4 and abs(f1.means[OURS] - 0.77722) <= 5e-4
          and rank == min(f1.mean_ranks.values()) and abs(rank - 2.04762) <= 0.05)
    dt = time.perf_counter() - t0
    ok &= dt < 1
    criterion(1, ok, f"acc mean {acc.means[OURS]:.5f}, F1 mean {f1.means[OURS]:.5f}, "
                     f"F1 rank {rank:.5f} (best)", dt)
    assert ok


def test_criterion_2_wilcoxon(criterion):
    t0 = time.perf_counter()
    table, _ = fixture_table()
    acc, f1 = table.metric("acc"), table.metric("f1")
    tpot = wilcoxon_signed_rank(f1[OURS], f1["TPOT"])
    mljar = wilcoxon_signed_rank(f1[OURS], f1["mljarsupervised"])
    askl = wilcoxon_signed_rank(acc[OURS], acc["auto-sklearn"])
    parts = {"TPOT F1 z": (tpot.z, abs(tpot.z - 3.315) <= 0.15),
             "mljar F1 z": (mljar.z, abs(mljar.z - 2.777) <= 0.15),
             "auto-sklearn acc z": (askl.z, abs(askl.z - 1.83) <= 0.15),
             "auto-sklearn acc p": (askl.p_value, askl.p_value > 0.05)}
    dt = time.perf_counter() - t0
    ok = all(v[1] for v in parts.values()) and dt < 1
    detail = ", ".join(f"{k} {v:.3f}{'' if good else ' (out of tolerance)'}"
                       for k, (v, good) in parts.items())
    criterion(2, ok, detail, dt)
    assert ok


def test_criterion_3_des_oracles(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    mismatches = 0
    for _ in range(200):
        cs, q, qpred, flags, k = oracles.random_instance(rng)
        roc = region_of_competence(cs, q, k)
        idx = oracles.roc_indices(cs.X, q, k)
        M = cs.pool_size
        e, _ = des_select("KNORA_E", flags, cs, roc)
        _, wu = des_select("KNORA_U", flags, cs, roc)
        same = [
            roc.indices.tolist() == idx,
            set(np.flatnonzero(e)) == oracles.knora_e(cs, idx, flags),
            wu.tolist() == oracles.knora_u(cs, idx, flags),
            competences("OLA", cs, roc, qpred).tolist() == [oracles.ola(cs, idx, j) for j in range(M)],
            competences("LCA", cs, roc, qpred).tolist()
            == [oracles.lca(cs, idx, j, qpred[j]) for j in range(M)],
            competences("Rank", cs, roc, qpred).tolist() == [oracles.rank(cs, idx, j) for j in range(M)],
            set(np.flatnonzero(dfp_prune(flags, cs, roc))) == oracles.dfp(cs, idx, flags),
        ]
        mismatches += not all(same)
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and dt < 30
    criterion(3, ok, f"{200 - mismatches}/200 instances match the brute-force oracles", dt)
    assert ok


def test_criterion_4_gp(criterion):
    t0 = time.perf_counter()
    X = np.linspace(0, 1, 7)[:, None]
    y = np.cos(5 * X[:, 0]) + X[:, 0]
    g = gp_fit(X, y, noise=1e-12)
    interp = max(abs(gp_posterior(g, x)[0] - v) for x, v in zip(X, y))

    far = gp_fit(X, y)
    _, sd = far.predict(np.array([[1e4]]), standardized=True)
    reversion = abs(sd[0] ** 2 / far.signal - 1)

    Xs = np.array([[0.1], [0.45], [0.8]])
    ys = np.array([0.3, -1.2, 0.7])
    ls, sf, sn = 0.3, 1.5, 1e-4
    g3 = gp_fit(Xs, ys, ls, sf, sn)
    z = (ys - ys.mean()) / ys.std()

    def k52(a, b):
        r = abs(a - b) / ls
        return sf * (1 + math.sqrt(5) * r + 5 / 3 * r * r) * math.exp(-math.sqrt(5) * r)

    K = np.array([[k52(a, b) + (sn if i == j else 0) for j, b in enumerate(Xs[:, 0])]
                  for i, a in enumerate(Xs[:, 0])])
    dense = 0.0
    for xq in (0.0, 0.3, 0.62, 1.0):
        kq = np.array([k52(xq, b) for b in Xs[:, 0]])
        mu = ys.mean() + ys.std() * (kq @ np.linalg.solve(K, z))
        sd3 = ys.std() * math.sqrt(sf - kq @ np.linalg.solve(K, kq))
        m, s = gp_posterior(g3, np.array([xq]))
        dense = max(dense, abs(m - mu), abs(s - sd3))
    dt = time.perf_counter() - t0
    ok = interp <= 1e-6 and reversion <= 0.01 and dense <= 1e-8 and dt < 5
    criterion(4, ok, f"interpolation error {interp:.1e}, prior variance gap {reversion:.1e}, "
                     f"dense solve gap {dense:.1e}", dt)
    assert ok


def test_criterion_5_bo_beats_random(criterion):
    t0 = time.perf_counter()
    space = ConfigurationSpace([Real("x", 0, 1)])

    def regret(cfg):
        return (cfg["x"] - 0.3) ** 2

    wins = 0
    for seed in SEEDS:
        bo = optimize(space, regret, 25, seed=seed).best_value
        rs = min(regret({"x": v}) for v in np.random.default_rng(10_000 + seed).uniform(size=25))
        wins += bo < rs
    dt = time.perf_counter() - t0
    ok = wins >= 7 and dt < 30
    criterion(5, ok, f"optimize beats random search in {wins}/10 seeds", dt)
    assert ok


def test_criterion_6_calibration(criterion):
    t0 = time.perf_counter()
    improved = 0
    for seed in SEEDS:
        data = blobs(100, seed=seed)
        margins = fit_base(default_spec("ridge_classifier"), data, seed).decision_scores(data.X)[:, 1]
        p = fit_platt(margins, data.y)
        before = oracles_log_loss(np.clip(margins, 0, 1), data.y)
        after = oracles_log_loss(platt_prob(p, margins), data.y)
        improved += after < before
    rng = np.random.default_rng(0)
    y = np.arange(150) % 3
    X = rng.normal(size=(150, 2)) + np.array([[0, 0], [3, 0], [0, 3]])[y]
    from autodess.dataio import Dataset
    cal = calibrate_out_of_fold(default_spec("perceptron"), Dataset(X, y, 3), seed=0)
    P = cal.predict_proba(rng.normal(size=(1000, 2)) * 4)
    row_gap = float(np.max(np.abs(P.sum(axis=1) - 1)))
    dt = time.perf_counter() - t0
    ok = improved == 10 and row_gap <= 1e-9 and dt < 10
    criterion(6, ok, f"log-loss reduced in {improved}/10 seeds, max row-sum gap {row_gap:.1e}", dt)
    assert ok


def oracles_log_loss(p, y):
    p = np.clip(p, 1e-12, 1 - 1e-12)
    return float(-np.mean(np.where(y == 1, np.log(p), np.log(1 - p))))


@pytest.fixture(scope="module")
def imbalance_runs():
    """Unrestricted runs on the imbalance suite, shared by criteria 7 and 8."""
    t0 = time.perf_counter()
    reports = [run_autodess(imbalanced_gaussians(seed=s), PLAN, seed=s).report for s in SEEDS]
    return reports, time.perf_counter() - t0


@pytest.mark.slow
def test_criterion_7_imbalance_f1(criterion, imbalance_runs):
    reports, dt = imbalance_runs
    ours = np.mean([r.metrics["test"]["f1"] for r in reports])
    base = np.mean([r.metrics["baseline"]["test"]["f1"] for r in reports])
    ok = ours >= base and dt < 300
    criterion(7, ok, f"mean test macro-F1 {ours:.5f} vs best single tuned member {base:.5f}", dt)
    assert ok


@pytest.mark.slow
def test_criterion_8_ablation(criterion, imbalance_runs):
    reports, dt = imbalance_runs
    t0 = time.perf_counter()
    full = np.mean([r.metrics["validation"]["f1"] for r in reports])
    stack = np.mean([run_autodess(imbalanced_gaussians(seed=s), PLAN, seed=s,
                                  strategies=["StackedGeneralization"]).report
                     .metrics["validation"]["f1"] for s in SEEDS])
    nodfp = np.mean([run_autodess(imbalanced_gaussians(seed=s), PLAN, seed=s,
                                  force_dfp=False).report.metrics["validation"]["f1"]
                     for s in SEEDS])
    dt += time.perf_counter() - t0
    ok = stack <= full and nodfp <= full and dt < 600
    criterion(8, ok, f"mean validation macro-F1 full {full:.5f}, stacking only {stack:.5f}, "
                     f"dfp off {nodfp:.5f}", dt)
    assert ok


@pytest.mark.slow
def test_criterion_9_test_isolation(criterion):
    t0 = time.perf_counter()
    plan = BudgetPlan(6, 3, 20)
    changed = 0
    for seed in range(3):
        train, val, test = stratified_split(imbalanced_gaussians(seed=seed), SplitSpec(seed=seed))
        a = run_splits(train, val, test, plan, seed).report.chosen()
        permuted = test.subset(np.arange(test.n))
        permuted.y = np.random.default_rng(seed).permutation(test.y)
        b = run_splits(train, val, permuted, plan, seed).report.chosen()
        changed += a != b
    dt = time.perf_counter() - t0
    ok = changed == 0 and dt < 120
    criterion(9, ok, f"chosen configuration unchanged in {3 - changed}/3 seeds", dt)
    assert ok
