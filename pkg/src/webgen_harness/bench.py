"""Benchmark metric aggregation over scored task records.

Four headline metrics over a run:

- functional success rate: weighted pass rate of the external GUI agent's
  per-test-case YES/PARTIAL/NO verdicts,
- aesthetic alignment score: mean judge grade, with non-rendered tasks
  counted at a configurable floor,
- valid render ratio: share of tasks that rendered without errors,
- lint & dependency pass rate: share of tasks passing static analysis
  and dependency resolution, over tasks where both facts were recorded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

VERDICTS = ("YES", "PARTIAL", "NO")


class EmptyInput(ValueError):
    """No task records to aggregate."""


class SchemaError(ValueError):
    """A verdicts line does not match the expected schema."""


@dataclass
class TaskRecord:
    """One benchmark task's scoring outcome."""

    task_id: str
    instruction: str = ""
    categories: list[str] = field(default_factory=list)
    reward_stage: str = "static_fail"  # static_fail | build_fail | dense
    s_vis: float | None = None
    stage_reached: str | None = None
    error_count: int | None = None
    agent_verdicts: list[str] | None = None
    lint_pass: bool | None = None
    deps_resolved: bool | None = None

    def rendered_clean(self) -> bool:
        return self.stage_reached == "done" and self.error_count == 0


@dataclass
class BenchSummary:
    """Aggregated metrics plus the denominators used to compute them."""

    fsr: float
    aas: float
    vrr: float
    ldpr: float
    n_tasks: int
    per_category: dict[str, dict[str, float]]
    counts: dict[str, int]

    def to_json_dict(self) -> dict:
        return {
            "fsr": self.fsr,
            "aas": self.aas,
            "vrr": self.vrr,
            "ldpr": self.ldpr,
            "n_tasks": self.n_tasks,
            "per_category": self.per_category,
            "counts": self.counts,
        }


def summarize(
    records: list[TaskRecord],
    partial_weight: float = 0.5,
    aas_floor: float = 0.0,
    include_failures_in_aas: bool = True,
) -> BenchSummary:
    """Aggregate a run of task records into the four metrics.

    PARTIAL verdicts weigh ``partial_weight``; tasks without verdicts are
    excluded from the success-rate denominator.  Tasks that never reached
    the dense reward stage contribute ``aas_floor`` to the aesthetic mean
    unless ``include_failures_in_aas`` is off, in which case they are
    dropped from it.
    """
    if not records:
        raise EmptyInput("no task records")

    summary = _aggregate(records, partial_weight, aas_floor, include_failures_in_aas)
    for category in sorted({c for r in records for c in r.categories}):
        subset = [r for r in records if category in r.categories]
        sub = _aggregate(subset, partial_weight, aas_floor, include_failures_in_aas)
        summary.per_category[category] = {"fsr": sub.fsr, "aas": sub.aas, "vrr": sub.vrr}
    return summary


def _aggregate(
    records: list[TaskRecord],
    partial_weight: float,
    aas_floor: float,
    include_failures_in_aas: bool,
) -> BenchSummary:
    verdict_weights = {"YES": 1.0, "PARTIAL": partial_weight, "NO": 0.0}

    fsr_num = fsr_den = 0.0
    aas_values: list[float] = []
    vrr_hits = 0
    ldpr_num = ldpr_den = 0

    for record in records:
        if record.agent_verdicts:
            for verdict in record.agent_verdicts:
                fsr_num += verdict_weights[verdict]
                fsr_den += 1
        if record.reward_stage == "dense" and record.s_vis is not None:
            aas_values.append(record.s_vis)
        elif include_failures_in_aas:
            aas_values.append(aas_floor)
        if record.rendered_clean():
            vrr_hits += 1
        if record.lint_pass is not None and record.deps_resolved is not None:
            ldpr_den += 1
            if record.lint_pass and record.deps_resolved:
                ldpr_num += 1

    n = len(records)
    return BenchSummary(
        fsr=100.0 * fsr_num / fsr_den if fsr_den else 0.0,
        aas=sum(aas_values) / len(aas_values) if aas_values else 0.0,
        vrr=100.0 * vrr_hits / n,
        ldpr=100.0 * ldpr_num / ldpr_den if ldpr_den else 0.0,
        n_tasks=n,
        per_category={},
        counts={
            "fsr_cases": int(fsr_den),
            "aas_tasks": len(aas_values),
            "vrr_tasks": n,
            "ldpr_tasks": ldpr_den,
        },
    )


def ingest_verdicts(path: str | Path) -> dict[str, list[str]]:
    """Read a JSONL file of {task_id, test_id, verdict} into per-task lists.

    Verdicts keep file order per task; unknown verdict strings raise
    :class:`SchemaError`.
    """
    grouped: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(f"{path}:{lineno}: invalid JSON: {e}") from e
            if not isinstance(entry, dict) or "task_id" not in entry or "verdict" not in entry:
                raise SchemaError(f"{path}:{lineno}: expected task_id/test_id/verdict object")
            verdict = entry["verdict"]
            if verdict not in VERDICTS:
                raise SchemaError(f"{path}:{lineno}: unknown verdict {verdict!r}")
            grouped.setdefault(entry["task_id"], []).append(verdict)
    return grouped


def load_run(path: str | Path) -> list[TaskRecord]:
    """Read a JSONL run file of task records."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(f"{path}:{lineno}: invalid JSON: {e}") from e
            records.append(TaskRecord(
                task_id=entry.get("task_id", f"task-{lineno}"),
                instruction=entry.get("instruction", ""),
                categories=list(entry.get("categories", [])),
                reward_stage=entry.get("reward_stage", entry.get("stage", "static_fail")),
                s_vis=entry.get("s_vis"),
                stage_reached=entry.get("stage_reached"),
                error_count=entry.get("error_count"),
                agent_verdicts=entry.get("agent_verdicts"),
                lint_pass=entry.get("lint_pass"),
                deps_resolved=entry.get("deps_resolved"),
            ))
    return records
