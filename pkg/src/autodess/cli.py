"""Command line: ``autodess fit | evaluate | reproduce``.

Exit codes: 0 success, 1 runtime or data failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .dataio import DEFAULT_MISSING, DataError, load_table
from .ensemble import STRATEGIES
from .metrics import accuracy, f1
from .orchestrator import METRICS, AutoDessModel, BudgetPlan, run_table

logger = logging.getLogger("autodess")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
SEP = "\t"


def _emit(*fields) -> None:
    print(SEP.join(_fmt(f) for f in fields))


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def model_path(report_path) -> Path:
    p = Path(report_path)
    return p.with_name(p.stem + ".model.pkl")


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("AUTODESS_THREADS")
    if env is None:
        return 1
    try:
        n = int(env)
    except ValueError:
        raise DataError(f"AUTODESS_THREADS={env!r} is not an integer") from None
    if n < 1:
        raise DataError("AUTODESS_THREADS must be at least 1")
    return n


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _nonneg(s: str) -> int:
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def cmd_fit(args) -> int:
    missing = tuple(args.missing_token) if args.missing_token else DEFAULT_MISSING
    table = load_table(args.data, args.label, missing)
    plan = BudgetPlan(args.feateng_evals, args.hpo_evals, args.ensemble_evals,
                      args.wall_clock_cap)
    result = run_table(table, args.label, plan, args.seed, metric=args.metric,
                       threads=_threads(args), strategies=args.strategies,
                       calibrate_all=args.calibrate_all)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    result.report.data["source"] = Path(args.data).name
    out.write_text(result.report.to_json() + "\n")
    result.model.save(model_path(out))
    m = result.report.metrics
    _emit("field", "value")
    _emit("strategy", result.report.ensemble["strategy"])
    _emit("members", ",".join(result.report.ensemble["members"]))
    _emit("k", result.report.ensemble["k"])
    _emit("dfp", result.report.ensemble["dfp"])
    _emit("test_accuracy", m["test"]["accuracy"])
    _emit("test_f1", m["test"]["f1"])
    _emit("baseline_member", m["baseline"]["member"])
    _emit("baseline_test_f1", m["baseline"]["test"]["f1"])
    _emit("report", out)
    if args.figures:
        from .plotting import search_history
        fig = search_history(result.report.to_dict(), Path(args.figures) / "search_history.png")
        _emit("figure", fig)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    report = json.loads(Path(args.report).read_text())
    model = AutoDessModel.load(args.model or model_path(args.report))
    if model.preprocessor is None:
        raise DataError("saved model has no preprocessing attached")
    label = args.label or model.preprocessor.label_column
    missing = tuple(args.missing_token) if args.missing_token else DEFAULT_MISSING
    table = load_table(args.data, label, missing)
    data = model.preprocessor.transform(table)
    pred = model.predict(data.X)
    _emit("metric", "value", "report_test_value")
    _emit("accuracy", accuracy(pred, data.y), report["metrics"]["test"]["accuracy"])
    _emit("f1", f1(pred, data.y), report["metrics"]["test"]["f1"])
    _emit("rows", data.n, "")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    from .reproduction import mask_discrepancies, reproduce
    rep = reproduce(args.fixture_dir, use_mask=args.mask)
    _emit("section", "metric", "method", "mean", "mean_rank")
    for metric, summ in rep.summaries.items():
        for m in summ.methods:
            _emit("summary", metric, m, summ.means[m], summ.mean_ranks[m])
    _emit("section", "metric", "method", "z", "p_value")
    for (metric, other), w in rep.wilcoxon.items():
        _emit("wilcoxon", metric, f"Ours vs {other}", w.z, w.p_value)
    _emit("section", "check", "value", "target", "status")
    for c in rep.checks:
        target = "" if c.target is None else c.target
        if c.tolerance:
            target = f"{c.target:g} +/- {c.tolerance:g}"
        _emit("check", c.name, c.value, target, "PASS" if c.passed else "FAIL")
    if not args.mask:
        _emit("section", "metric", "method", "mean_unmasked", "mean_masked")
        for metric, m, v, masked in mask_discrepancies(rep):
            _emit("unmasked", metric, m, v, masked)
    if args.figures:
        from .metrics import load_comparison, load_failure_mask
        from .plotting import paired_scatter, score_boxplots
        from .reproduction import OURS, fixture_paths
        table_path, mask_path = fixture_paths(args.fixture_dir)
        table = load_comparison(table_path)
        _, mask = load_failure_mask(mask_path)
        out = Path(args.figures)
        for metric in ("acc", "f1"):
            cols = table.metric(metric)
            _emit("figure", score_boxplots(cols, out / f"scores_{metric}.png", metric,
                                           mask if args.mask else None))
            others = {k: v for k, v in cols.items() if k != OURS}
            _emit("figure", paired_scatter(cols[OURS], others, out / f"paired_{metric}.png",
                                           title=metric))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="autodess", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="search a pipeline on a CSV and write a report")
    f.add_argument("--data", required=True)
    f.add_argument("--label", required=True)
    f.add_argument("--seed", type=int, default=42)
    f.add_argument("--out", default="autodess_report.json")
    f.add_argument("--feateng-evals", type=_nonneg, default=10)
    f.add_argument("--hpo-evals", type=_nonneg, default=5)
    f.add_argument("--ensemble-evals", type=_nonneg, default=30)
    f.add_argument("--wall-clock-cap", type=float, default=None)
    f.add_argument("--threads", type=_positive, default=None)
    f.add_argument("--metric", choices=METRICS, default="f1_macro")
    f.add_argument("--strategies", nargs="+", choices=STRATEGIES, default=None)
    f.add_argument("--calibrate-all", action="store_true",
                   help="Platt-calibrate probabilistic members too")
    f.add_argument("--missing-token", action="append", default=None,
                   help="cell value treated as missing (repeatable)")
    f.add_argument("--figures", default=None, help="directory for figures")
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("evaluate", help="score a saved run on new data")
    e.add_argument("--report", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--model", default=None)
    e.add_argument("--label", default=None)
    e.add_argument("--missing-token", action="append", default=None)
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("reproduce", help="recompute the bundled comparison statistics")
    r.add_argument("--fixture-dir", default=None)
    r.add_argument("--mask", action=argparse.BooleanOptionalAction, default=True,
                   help="exclude failure rows from means")
    r.add_argument("--figures", default=None)
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on usage errors
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, ValueError, OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
