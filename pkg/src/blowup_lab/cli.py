"""Command-line entry point: ``blowup-lab run|fixtures|check``."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import BlowupLabError
from .fixtures import list_fixtures
from .jobs import dumps_report, run_job
from .verify import inequality_harness


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blowup-lab",
        description="Radial large solutions of Delta u + |grad u| = p(x) f(u): "
                    "classification, construction and verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a JSON job file")
    run.add_argument("job", help="path to the job file")
    run.add_argument("--out", required=True, help="output directory for report.json and CSV files")

    sub.add_parser("fixtures", help="list the builtin potentials")

    check = sub.add_parser("check", help="random trials of the nested-kernel inequality")
    check.add_argument("--trials", type=int, default=500)
    check.add_argument("--seed", type=int, default=7)
    check.add_argument("--dimensions", type=int, nargs="+", default=[3, 4, 5, 10])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "fixtures":
        print(list_fixtures())
        return 0
    if args.command == "check":
        try:
            summary = inequality_harness(args.trials, args.seed, args.dimensions)
        except BlowupLabError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return exc.exit_code
        sys.stdout.write(dumps_report(summary.as_dict()))
        return 1 if summary.violations else 0
    code = run_job(args.job, args.out)
    with open(f"{args.out}/report.json") as fh:
        report = json.load(fh)
    for task, result in report.get("results", {}).items():
        if isinstance(result, dict) and "verdict" in result:
            print(f"{task}: {result['verdict']}")
        else:
            print(f"{task}: done")
    for failure in report.get("failures", []):
        print(f"FAILED: {failure}", file=sys.stderr)
    if "error" in report:
        print(f"error ({report['error']['type']}): {report['error']['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
