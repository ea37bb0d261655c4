"""Command-line runner: ``check`` a definition file or run the built-in examples."""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .report import DEFAULT_TOL, RunReport, emit_report
from .verify import ALL_SUITES, builtin_fixtures, fixture_from_file, get_fixture, outcome_matches, prepare, run_suite
from .verify.fixtures import Fixture


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--suite", action="append", choices=ALL_SUITES, metavar="ID",
                   help="suite to run (repeatable); default: every suite valid for the fixture")
    p.add_argument("--samples", type=int, default=64, help="sample points (default 64)")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="relative tolerance (default 1e-8)")
    p.add_argument("--seed", type=int, default=1, help="sampling and randomization seed (default 1)")
    p.add_argument("--report", metavar="PATH", help="write the JSON report here")
    p.add_argument("--quiet", action="store_true", help="print one line per suite only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contrapoisson",
                                     description="Numerically verify warped Poisson structure identities.")
    sub = parser.add_subparsers(dest="command", required=True)
    check = sub.add_parser("check", help="run suites on a JSON definition file")
    check.add_argument("definition", help="chart or warped definition (JSON)")
    _add_run_flags(check)
    ex = sub.add_parser("examples", help="built-in fixture gallery")
    exsub = ex.add_subparsers(dest="action", required=True)
    exsub.add_parser("list", help="list built-in fixtures")
    run = exsub.add_parser("run", help="run a built-in fixture and compare with its expected outcomes")
    run.add_argument("name")
    _add_run_flags(run)
    return parser


def _select(fixture: Fixture, wanted: Optional[Sequence[str]]) -> list:
    if not wanted:
        return list(fixture.suites)
    bad = [s for s in wanted if s not in fixture.suites]
    if bad:
        raise SystemExit(f"error: suite(s) {', '.join(bad)} need a warped fixture; {fixture.name} is a chart")
    return list(dict.fromkeys(wanted))


def execute(fixture: Fixture, args, builtin: bool, out=None) -> int:
    """Run the selected suites; return the process exit code."""
    out = sys.stdout if out is None else out
    suites = _select(fixture, args.suite)
    prepared = prepare(fixture, args.samples, args.seed)
    run = RunReport(fixture.name, args.seed, args.samples)
    ok = True
    for sid in suites:
        rep = run_suite(fixture, sid, args.samples, args.tol, args.seed, prepared=prepared)
        run.suites.append(rep)
        if builtin:
            expected = fixture.expected.get(sid, "pass")
            good = outcome_matches(rep, expected)
            tag = f"expected {expected}: {'ok' if good else 'MISMATCH'}"
        else:
            good = rep.status != "fail"
            tag = ""
        ok = ok and good
        lines = rep.summary_lines()
        print(f"{lines[0]}  {tag}".rstrip(), file=out)
        if not args.quiet:
            for line in lines[1:]:
                print(line, file=out)
    if args.report:
        emit_report(run, args.report)
    print(f"{fixture.name}: {'OK' if ok else 'FAILED'}", file=out)
    return 0 if ok else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "check":
        try:
            fixture = fixture_from_file(args.definition)
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: cannot load {args.definition}: {exc}", file=sys.stderr)
            return 2
        return execute(fixture, args, builtin=False)
    if args.action == "list":
        for fx in builtin_fixtures():
            print(f"{fx.name:24} {fx.kind:7} {fx.description}")
        return 0
    try:
        fixture = get_fixture(args.name)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    return execute(fixture, args, builtin=True)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
