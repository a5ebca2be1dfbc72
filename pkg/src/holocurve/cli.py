"""Command line front end: run, verify and grid."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

from .scenario import Report, ScenarioError, curvature_grid, load_scenario, run

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

CSV_FIELDS = ["task", "check", "value", "tolerance", "relation", "asserted", "passed", "detail"]


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="holocurve", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p: argparse.ArgumentParser, default_scenario: str | None) -> None:
        p.add_argument("--scenario", default=default_scenario, required=default_scenario is None,
                       help="scenario file or bundled scenario name")
        p.add_argument("--tolerance", type=float, help="override every asserted residual tolerance")
        p.add_argument("--max-order", type=int, nargs=2, metavar=("P", "Q"), help="jet caps for expansion tasks")
        p.add_argument("--fd-check", action="store_true", help="cross-check derivatives against central differences")
        p.add_argument("--task", action="append", help="only run tasks of this kind or name (repeatable)")
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--output", help="write the report here instead of stdout")

    common(sub.add_parser("run", help="run a scenario and emit its report"), None)
    common(sub.add_parser("verify", help="run a scenario and print a pass/fail summary"), "corpus")

    grid = sub.add_parser("grid", help="curvature values on a square grid")
    grid.add_argument("--scenario", required=True, help="scenario that defines the curve")
    grid.add_argument("--curve", required=True, help="curve name in the scenario")
    grid.add_argument("--radius", type=float, default=0.5, help="half-width of the square")
    grid.add_argument("--size", type=int, default=5, help="points per side")
    grid.add_argument("--center", type=float, nargs=2, default=(0.0, 0.0), metavar=("RE", "IM"), help="center of the square")
    grid.add_argument("--format", choices=["json", "csv"], default="csv")
    grid.add_argument("--output", help="write the rows here instead of stdout")
    return parser


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(rows: list[dict], fields: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: "" if row[k] is None else row[k] for k in fields})
    return buf.getvalue()


def format_report(report: Report, fmt: str) -> str:
    doc = report.to_dict()
    if fmt == "csv":
        return _csv(doc["checks"], CSV_FIELDS)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def summary_table(report: Report, wall: float) -> str:
    """One row per task with check counts, worst margin and time."""
    lines = [f"{'task':<46} {'checks':>6} {'failed':>6} {'worst/tol':>10} {'time[s]':>8}"]
    order: list[str] = []
    for c in report.checks:
        if c.task not in order:
            order.append(c.task)
    for name in order:
        rows = [c for c in report.checks if c.task == name and c.asserted]
        failed = sum(c.passed is False for c in rows)
        margins = [c.margin for c in rows if c.margin is not None]
        worst = f"{max(margins):.2e}" if margins else "-"
        elapsed = report.timings.get(name)
        t = f"{elapsed:.2f}" if elapsed is not None else "-"
        lines.append(f"{name:<46} {len(rows):>6} {failed:>6} {worst:>10} {t:>8}")
    status = "PASS" if report.passed else "FAIL"
    lines.append(f"{status}: {len(report.failures)} failed of {sum(c.asserted for c in report.checks)} asserted checks; wall time {wall:.2f} s")
    for c in report.failures:
        margin = f" (margin {c.margin:.3g}x)" if c.margin is not None else ""
        lines.append(f"  FAILED {c.task} / {c.check}: {c.value:.3e} {c.relation} {c.tolerance}{margin} {c.detail}".rstrip())
    return "\n".join(lines) + "\n"


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.verb == "grid":
        try:
            rows = curvature_grid(scenario, args.curve, args.radius, args.size, complex(*args.center))
        except ScenarioError as exc:
            print(f"input error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        if args.format == "csv":
            text = _csv(rows, ["re", "im", "value", "flag"])
        else:
            text = json.dumps({"schema_version": "1", "curve": args.curve, "rows": rows}, indent=2) + "\n"
        _emit(text, args.output)
        return EXIT_OK

    start = time.perf_counter()
    try:
        report = run(scenario, args.tolerance, args.max_order, args.fd_check, args.task)
    except ScenarioError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    wall = time.perf_counter() - start
    if args.verb == "run":
        _emit(format_report(report, args.format), args.output)
    else:
        if args.output:
            Path(args.output).write_text(format_report(report, args.format))
        sys.stdout.write(summary_table(report, wall))
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
