"""Cascaded reward over verification, execution, and judge outcomes.

Scoring is staged: a static-compliance failure or a failed build maps to a
flat scalar (0 by default) and never touches the judge; only projects that
rendered cleanly pay for a judge call and receive the dense combination

    total = s_vis + gamma * s_func + lambda * s_cot

of the aesthetic grade, the error-free-execution flag, and the
reasoning-format flag.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .judge import JudgeClient
from .manifest import ModelResponse, has_reasoning_format
from .sandbox import Observation
from .verifier import ComplianceReport

STAGE_STATIC_FAIL = "static_fail"
STAGE_BUILD_FAIL = "build_fail"
STAGE_DENSE = "dense"


@dataclass
class RewardWeights:
    """Dense-combination weights plus the failure-stage scalars."""

    gamma: float = 0.1
    lambda_: float = 0.1
    psi_static: float = 0.0
    psi_build: float = 0.0

    def __post_init__(self) -> None:
        if self.gamma < 0 or self.lambda_ < 0:
            raise ValueError("weights must be non-negative")


@dataclass
class RewardBreakdown:
    """Where the cascade stopped and every term that went into the total."""

    stage: str
    s_vis: float | None
    s_func: int | None
    s_cot: int
    total: float
    judge_calls: int
    gamma: float
    lambda_: float

    def to_json_dict(self) -> dict:
        return {
            "stage": self.stage,
            "s_vis": self.s_vis,
            "s_func": self.s_func,
            "s_cot": self.s_cot,
            "gamma": self.gamma,
            "lambda": self.lambda_,
            "total": self.total,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def score(
    resp: ModelResponse,
    report: ComplianceReport,
    obs: Observation | None,
    judge: JudgeClient,
    weights: RewardWeights | None = None,
    instruction: str = "",
) -> RewardBreakdown:
    """Run the reward cascade for one sample.

    ``obs`` must be absent exactly when the report failed (the pipeline
    never ran).  Judge errors propagate to the caller; a judge failure is
    infrastructure noise, never a silent zero.
    """
    weights = weights or RewardWeights()
    s_cot = 1 if has_reasoning_format(resp) else 0

    if not report.passed:
        if obs is not None:
            raise ValueError("observation provided for a statically failed sample")
        return RewardBreakdown(
            stage=STAGE_STATIC_FAIL,
            s_vis=None,
            s_func=None,
            s_cot=s_cot,
            total=weights.psi_static,
            judge_calls=0,
            gamma=weights.gamma,
            lambda_=weights.lambda_,
        )

    if obs is None:
        raise ValueError("observation missing for a statically valid sample")

    if obs.stage_reached != "done":
        return RewardBreakdown(
            stage=STAGE_BUILD_FAIL,
            s_vis=None,
            s_func=None,
            s_cot=s_cot,
            total=weights.psi_build,
            judge_calls=0,
            gamma=weights.gamma,
            lambda_=weights.lambda_,
        )

    screenshots = [obs.screenshots[route] for route in sorted(obs.screenshots)]
    verdict = judge.score_aesthetics(screenshots, instruction)
    s_vis = float(verdict.grade)
    s_func = functional_integrity(obs)
    total = s_vis + weights.gamma * s_func + weights.lambda_ * s_cot
    return RewardBreakdown(
        stage=STAGE_DENSE,
        s_vis=s_vis,
        s_func=s_func,
        s_cot=s_cot,
        total=total,
        judge_calls=1,
        gamma=weights.gamma,
        lambda_=weights.lambda_,
    )


def functional_integrity(obs: Observation) -> int:
    """1 iff the rendered project logged zero errors; no partial credit."""
    if obs.stage_reached != "done":
        raise ValueError("functional integrity is defined only for completed renders")
    return 1 if obs.error_count == 0 else 0
