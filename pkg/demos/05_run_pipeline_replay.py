"""Run the whole pipeline on the bundled micro-project from recorded responses.

Equivalent to:

    xcrate run fixtures/microproject --replay fixtures/microproject/replay_full.jsonl

and then once more with retrieval disabled, reproducing the ablation pattern:
dependency-using functions only validate when retrieval context with
call-enabling imports is present.
"""

import tempfile
from pathlib import Path

from xcrate.pipeline import RunConfig, run_project

MICRO = Path(__file__).resolve().parents[1] / "fixtures" / "microproject"


def main() -> None:
    scratch = Path(tempfile.mkdtemp(prefix="pipeline_demo_"))

    for label, log, no_rag in (
        ("full", "replay_full.jsonl", False),
        ("no-rag", "replay_norag.jsonl", True),
    ):
        config = RunConfig(
            replay_log=MICRO / log,
            no_rag=no_rag,
            report_path=scratch / f"{label}.json",
        )
        report, hard_errors = run_project(MICRO, config)
        print(f"--- {label}")
        print(report.render_table())
        for item_id, row in report.functions.items():
            print(f"  {item_id}: compiled={row['compiled']} io_equiv={row['io_equiv']}")
        if hard_errors:
            print("  hard errors:", hard_errors)
        print()


if __name__ == "__main__":
    main()
