"""Command-line entry point.

    xcrate run <project> [--no-rag] [--no-imports] [--replay <log>]
               [--record <log>] [--budgets s,g,b] [--workers n]
               [--report <path>]

Exits nonzero only on hard errors; validation failures are reported outcomes.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .pipeline import RunConfig, run_project
from .validation import Budget


def _parse_budgets(text: str) -> Budget:
    try:
        schema, glue, body = (int(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            "budgets must be three comma-separated ints: schema,glue,body"
        ) from exc
    return Budget(schema_retries=schema, glue_retries=glue, body_retries=body)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xcrate")
    commands = parser.add_subparsers(dest="command", required=True)
    run = commands.add_parser("run", help="translate and validate a project bundle")
    run.add_argument("project", help="project bundle directory")
    run.add_argument("--no-rag", action="store_true", help="disable retrieval context")
    run.add_argument(
        "--no-imports", action="store_true", help="strip import paths from suggestions"
    )
    run.add_argument("--replay", metavar="LOG", help="replay recorded responses")
    run.add_argument("--record", metavar="LOG", help="record live responses")
    run.add_argument(
        "--budgets", type=_parse_budgets, default=Budget(), metavar="S,G,B",
        help="schema, glue and body retry budgets (default 3,3,5)",
    )
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--report", metavar="PATH", help="write the JSON report here")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = RunConfig(
        no_rag=args.no_rag,
        no_imports=args.no_imports,
        replay_log=Path(args.replay) if args.replay else None,
        record_log=Path(args.record) if args.record else None,
        budgets=args.budgets,
        workers=args.workers,
        report_path=Path(args.report) if args.report else None,
    )
    report, hard_errors = run_project(args.project, config)
    print(report.render_table())
    for error in hard_errors:
        print(f"error: {error}", file=sys.stderr)
    return 1 if hard_errors else 0


if __name__ == "__main__":
    sys.exit(main())
