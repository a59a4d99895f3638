"""Verification, sandboxed execution, and cascaded reward scoring for
LLM-generated website projects, plus group-relative policy-optimization
numerics and benchmark metric aggregation."""

from .bench import BenchSummary, TaskRecord, ingest_verdicts, summarize
from .grpo import GroupBatch, advantages, clipped_term, kl_penalty, objective
from .judge import AestheticVerdict, HttpJudge, JudgeConfig, StubJudge, parse_grade
from .manifest import (
    Action,
    ModelResponse,
    ParseError,
    WebArtifact,
    has_reasoning_format,
    parse_artifact,
    parse_response,
    serialize_artifact,
)
from .reward import RewardBreakdown, RewardWeights, functional_integrity, score
from .sandbox import Observation, PipelineConfig, classify_errors, materialize, run_pipeline
from .scaffold import (
    ProjectFiles,
    ProjectGraph,
    Template,
    build_graph,
    inject,
    load_template,
)
from .verifier import ComplianceReport, indicator, verify

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AestheticVerdict",
    "BenchSummary",
    "ComplianceReport",
    "GroupBatch",
    "HttpJudge",
    "JudgeConfig",
    "ModelResponse",
    "Observation",
    "ParseError",
    "PipelineConfig",
    "ProjectFiles",
    "ProjectGraph",
    "RewardBreakdown",
    "RewardWeights",
    "StubJudge",
    "TaskRecord",
    "Template",
    "WebArtifact",
    "advantages",
    "build_graph",
    "classify_errors",
    "clipped_term",
    "functional_integrity",
    "has_reasoning_format",
    "indicator",
    "ingest_verdicts",
    "inject",
    "kl_penalty",
    "load_template",
    "materialize",
    "objective",
    "parse_artifact",
    "parse_grade",
    "parse_response",
    "run_pipeline",
    "score",
    "serialize_artifact",
    "summarize",
    "verify",
]
