import json

import numpy as np
import pytest

from autodess.cli import main, model_path
from autodess.synthetic import blobs, two_moons

FAST = ["--feateng-evals", "2", "--hpo-evals", "1", "--ensemble-evals", "6"]


def to_csv(path, data, rows=None):
    rows = range(data.n) if rows is None else rows
    names = [f"x{j}" for j in range(data.d)]
    lines = [",".join(names + ["y"])]
    for i in rows:
        lines.append(",".join(f"{v:.10g}" for v in data.X[i]) + f",c{data.y[i]}")
    path.write_text("\n".join(lines) + "\n")
    return path


def tsv(text):
    return [line.split("\t") for line in text.strip().splitlines()]


def fit(tmp_path, data, *extra, name="report.json"):
    csv = to_csv(tmp_path / "data.csv", data)
    out = tmp_path / name
    code = main(["fit", "--data", str(csv), "--label", "y", "--out", str(out), *FAST, *extra])
    return code, csv, out


# ------------------------------------------------------------------ fit

def test_fit_happy_path(tmp_path, capsys):
    code, _, out = fit(tmp_path, blobs(150, seed=1), "--seed", "1", "--ensemble-evals", "20")
    assert code == 0
    report = json.loads(out.read_text())
    assert report["metrics"]["test"]["accuracy"] == 1.0
    assert len(report["history"]["ensemble"]) == 20
    assert model_path(out).exists()
    fields = dict(r[:2] for r in tsv(capsys.readouterr().out))
    assert fields["test_accuracy"] == "1" and "strategy" in fields


def test_missing_label_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["fit", "--data", "x.csv"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_bad_flag_values_are_usage_errors():
    for argv in (["fit", "--data", "a", "--label", "y", "--threads", "0"],
                 ["fit", "--data", "a", "--label", "y", "--metric", "auc"],
                 ["frobnicate"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2


def test_missing_file_and_label_column_exit_1(tmp_path, capsys):
    assert main(["fit", "--data", str(tmp_path / "none.csv"), "--label", "y"]) == 1
    csv = to_csv(tmp_path / "d.csv", blobs(40, seed=0))
    assert main(["fit", "--data", str(csv), "--label", "nope"]) == 1
    assert capsys.readouterr().err.count("error:") == 2


def test_bad_thread_env(tmp_path, monkeypatch):
    monkeypatch.setenv("AUTODESS_THREADS", "many")
    code, _, _ = fit(tmp_path, blobs(60, seed=0))
    assert code == 1


def test_reports_identical_except_timings(tmp_path, monkeypatch):
    monkeypatch.setenv("AUTODESS_THREADS", "2")
    data = two_moons(160, seed=3)
    _, _, a = fit(tmp_path, data, name="a.json")
    _, _, b = fit(tmp_path, data, name="b.json")
    ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
    assert ra.pop("timings").keys() == rb.pop("timings").keys()
    assert json.dumps(ra, sort_keys=True) == json.dumps(rb, sort_keys=True)


def test_fit_figures(tmp_path, capsys):
    code, _, _ = fit(tmp_path, blobs(80, seed=2), "--figures", str(tmp_path / "figs"))
    assert code == 0
    assert (tmp_path / "figs" / "search_history.png").stat().st_size > 0


# ------------------------------------------------------------------ evaluate

@pytest.fixture(scope="module")
def moons_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("moons")
    data = two_moons(500, seed=4)
    code, csv, out = fit(tmp, data)
    assert code == 0
    return tmp, data, csv, out, json.loads(out.read_text())


def _evaluate(capsys, report, csv):
    capsys.readouterr()
    assert main(["evaluate", "--report", str(report), "--data", str(csv)]) == 0
    rows = {r[0]: r for r in tsv(capsys.readouterr().out)}
    return float(rows["accuracy"][1]), float(rows["f1"][1])


def test_evaluate_on_test_split_matches_report(moons_run, capsys):
    tmp, data, _, out, report = moons_run
    test_csv = to_csv(tmp / "test.csv", data, report["data"]["test_rows"])
    acc, f1 = _evaluate(capsys, out, test_csv)
    assert acc == pytest.approx(report["metrics"]["test"]["accuracy"], abs=1e-6)
    assert f1 == pytest.approx(report["metrics"]["test"]["f1"], abs=1e-6)


def test_evaluate_is_row_order_invariant(moons_run, capsys):
    tmp, data, csv, out, _ = moons_run
    perm = np.random.default_rng(0).permutation(data.n)
    shuffled = to_csv(tmp / "shuffled.csv", data, perm)
    assert _evaluate(capsys, out, csv) == _evaluate(capsys, out, shuffled)


def test_evaluate_on_fresh_sample_is_close(moons_run, capsys):
    tmp, _, _, out, report = moons_run
    fresh = to_csv(tmp / "fresh.csv", two_moons(500, seed=99))
    acc, f1 = _evaluate(capsys, out, fresh)
    assert abs(acc - report["metrics"]["test"]["accuracy"]) <= 0.1
    assert abs(f1 - report["metrics"]["test"]["f1"]) <= 0.1


def test_evaluate_schema_mismatch_exit_1(moons_run, tmp_path):
    _, _, _, out, _ = moons_run
    bad = tmp_path / "bad.csv"
    bad.write_text("x0,y\n1.0,c0\n2.0,c1\n")
    assert main(["evaluate", "--report", str(out), "--data", str(bad)]) == 1


# ------------------------------------------------------------------ reproduce

def test_reproduce_default(capsys):
    assert main(["reproduce"]) == 0
    rows = tsv(capsys.readouterr().out)
    checks = {r[1]: r for r in rows if r[0] == "check"}
    acc = next(r for name, r in checks.items() if "acc" in name and "mean" in name)
    assert abs(float(acc[2]) - 0.83804) <= 5e-4 and acc[-1] == "PASS"
    mljar = next(r for r in rows if r[0] == "wilcoxon" and r[1] == "f1" and "mljar" in r[2])
    assert abs(float(mljar[3]) - 2.777) <= 0.15


def test_reproduce_without_mask_reports_discrepancy(capsys):
    assert main(["reproduce", "--no-mask"]) == 0
    rows = [r for r in tsv(capsys.readouterr().out) if r[0] == "unmasked"]
    assert rows
    assert all(float(r[3]) < float(r[4]) for r in rows)


def test_reproduce_missing_fixture_exit_1(tmp_path, capsys):
    assert main(["reproduce", "--fixture-dir", str(tmp_path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_reproduce_figures(tmp_path, capsys):
    assert main(["reproduce", "--figures", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "paired_acc.png", "paired_f1.png", "scores_acc.png", "scores_f1.png"]
