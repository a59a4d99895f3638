"""Aggregate a benchmark run into the four headline metrics.

Builds a small synthetic run, merges in GUI-agent verdicts from a JSONL
file, and prints the summary with per-category breakdowns. The same flow
is available as `webgen-harness evaluate --run run.jsonl --verdicts v.jsonl`.

Run from the repository root:

    python demos/04_benchmark_metrics.py
"""

import json
import tempfile
from pathlib import Path

from webgen_harness.bench import TaskRecord, ingest_verdicts, summarize


def main() -> None:
    records = [
        TaskRecord(task_id="shop", reward_stage="dense", s_vis=4.0, stage_reached="done",
                   error_count=0, lint_pass=True, deps_resolved=True,
                   categories=["e-commerce"]),
        TaskRecord(task_id="blog", reward_stage="dense", s_vis=3.0, stage_reached="done",
                   error_count=1, lint_pass=True, deps_resolved=True,
                   categories=["content"]),
        TaskRecord(task_id="charts", reward_stage="build_fail", stage_reached="build",
                   lint_pass=False, deps_resolved=True, categories=["dashboard"]),
        TaskRecord(task_id="tracker", reward_stage="dense", s_vis=5.0, stage_reached="done",
                   error_count=0, lint_pass=True, deps_resolved=True,
                   categories=["dashboard"]),
        TaskRecord(task_id="broken", reward_stage="static_fail", categories=["content"]),
    ]

    # Interactive test verdicts arrive as JSONL from the external GUI agent.
    verdict_lines = [
        {"task_id": "shop", "test_id": "add-to-cart", "verdict": "YES"},
        {"task_id": "shop", "test_id": "checkout", "verdict": "PARTIAL"},
        {"task_id": "blog", "test_id": "search", "verdict": "NO"},
        {"task_id": "tracker", "test_id": "filter", "verdict": "YES"},
    ]
    with tempfile.TemporaryDirectory() as tmp:
        verdicts_path = Path(tmp) / "verdicts.jsonl"
        verdicts_path.write_text(
            "\n".join(json.dumps(line) for line in verdict_lines), encoding="utf-8",
        )
        verdicts = ingest_verdicts(verdicts_path)

    for record in records:
        record.agent_verdicts = verdicts.get(record.task_id)

    summary = summarize(records, partial_weight=0.5)
    print(f"functional success   {summary.fsr:6.2f} %  "
          f"({summary.counts['fsr_cases']} test cases)")
    print(f"aesthetic alignment  {summary.aas:6.2f}    "
          f"({summary.counts['aas_tasks']} tasks, failures count as grade 0)")
    print(f"valid render ratio   {summary.vrr:6.2f} %  ({summary.n_tasks} tasks)")
    print(f"lint+deps pass rate  {summary.ldpr:6.2f} %  "
          f"({summary.counts['ldpr_tasks']} tasks with both facts)")

    print("\nper category:")
    for category, metrics in summary.per_category.items():
        print(f"  {category:<12} fsr={metrics['fsr']:6.2f}  "
              f"aas={metrics['aas']:.2f}  vrr={metrics['vrr']:6.2f}")


if __name__ == "__main__":
    main()
