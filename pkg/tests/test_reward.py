from __future__ import annotations

import random

import pytest

from webgen_harness import parse_response
from webgen_harness.judge import JudgeConfig, StubJudge
from webgen_harness.reward import (
    STAGE_BUILD_FAIL,
    STAGE_DENSE,
    STAGE_STATIC_FAIL,
    RewardBreakdown,
    RewardWeights,
    functional_integrity,
    score,
)
from webgen_harness.sandbox import Observation
from webgen_harness.verifier import FATAL, ComplianceReport, Violation

RESP_WITH_COT = parse_response("<think>plan</think><answer>body</answer>")
RESP_NO_COT = parse_response("<answer>body</answer>")


def passing_report() -> ComplianceReport:
    return ComplianceReport(passed=True)


def failing_report() -> ComplianceReport:
    return ComplianceReport(passed=False, violations=[
        Violation(rule="content.imports.unresolved", severity=FATAL, message="x"),
    ])


def observation(stage="done", error_count=0, shots=1) -> Observation:
    return Observation(
        screenshots={f"/route{i}": b"png" + bytes([i]) for i in range(shots)},
        runtime_log="",
        console_log=[{"level": "error", "message": "boom", "route": "/"}] * error_count,
        error_count=error_count,
        stage_reached=stage,
        timings={},
    )


def counting_stub(grade=4) -> StubJudge:
    return StubJudge(JudgeConfig(stub_mode=True, stub_grade=grade, backoff_ms=0))


def test_static_failure_scores_zero_without_judge():
    judge = counting_stub()
    breakdown = score(RESP_WITH_COT, failing_report(), None, judge)
    assert breakdown.stage == STAGE_STATIC_FAIL
    assert breakdown.total == 0.0
    assert breakdown.judge_calls == 0
    assert breakdown.s_vis is None and breakdown.s_func is None
    assert breakdown.s_cot == 1
    assert judge.calls == []


def test_build_failure_scores_zero_without_judge():
    judge = counting_stub()
    breakdown = score(RESP_WITH_COT, passing_report(), observation(stage="build"), judge)
    assert breakdown.stage == STAGE_BUILD_FAIL
    assert breakdown.total == 0.0
    assert breakdown.judge_calls == 0
    assert judge.calls == []


def test_dense_formula_direct_substitution():
    breakdown = score(RESP_WITH_COT, passing_report(), observation(), counting_stub(4))
    assert breakdown.stage == STAGE_DENSE
    assert breakdown.s_vis == 4.0
    assert breakdown.s_func == 1
    assert breakdown.s_cot == 1
    assert breakdown.total == pytest.approx(4.2, abs=1e-12)


def test_dense_binary_terms_zeroed():
    breakdown = score(RESP_NO_COT, passing_report(), observation(error_count=3), counting_stub(5))
    assert breakdown.total == pytest.approx(5.0, abs=1e-12)
    assert breakdown.s_func == 0
    assert breakdown.s_cot == 0


def test_all_screenshots_sent_in_one_call():
    judge = counting_stub(3)
    score(RESP_WITH_COT, passing_report(), observation(shots=3), judge)
    assert len(judge.calls) == 1
    assert judge.calls[0]["images"] == 3


def test_monotone_in_s_vis():
    totals = [
        score(RESP_WITH_COT, passing_report(), observation(), counting_stub(g)).total
        for g in range(6)
    ]
    assert totals == sorted(totals)
    assert all(b > a for a, b in zip(totals, totals[1:]))


def test_zero_weight_degeneracy():
    weights = RewardWeights(gamma=0.0, lambda_=0.0)
    breakdown = score(RESP_WITH_COT, passing_report(), observation(), counting_stub(3), weights)
    assert breakdown.total == 3.0


def test_configurable_failure_scalars():
    weights = RewardWeights(psi_static=-1.0, psi_build=-0.5)
    static = score(RESP_WITH_COT, failing_report(), None, counting_stub(), weights)
    build = score(RESP_WITH_COT, passing_report(), observation(stage="install"), counting_stub(), weights)
    assert static.total == -1.0
    assert build.total == -0.5


def test_cascade_judge_calls_match_dense_count():
    judge = counting_stub(4)
    stages = []
    for i in range(20):
        if i < 8:
            stages.append(score(RESP_WITH_COT, failing_report(), None, judge))
        elif i < 12:
            stages.append(score(RESP_WITH_COT, passing_report(), observation(stage="build"), judge))
        else:
            stages.append(score(RESP_WITH_COT, passing_report(), observation(), judge))
    assert len(judge.calls) == 8
    assert sum(b.judge_calls for b in stages) == 8
    assert all(b.total == 0.0 for b in stages[:12])


def test_reward_bound_fuzz():
    rng = random.Random(99)
    weights = RewardWeights()
    for _ in range(500):
        roll = rng.random()
        resp = RESP_WITH_COT if rng.random() < 0.5 else RESP_NO_COT
        if roll < 0.3:
            breakdown = score(resp, failing_report(), None, counting_stub())
        elif roll < 0.5:
            stage = rng.choice(["install", "build", "serve", "render"])
            breakdown = score(resp, passing_report(), observation(stage=stage), counting_stub())
        else:
            obs = observation(error_count=rng.choice([0, 0, 1, 5]), shots=rng.randint(1, 3))
            breakdown = score(resp, passing_report(), obs, counting_stub(rng.randint(0, 5)), weights)
        assert 0.0 <= breakdown.total <= 5.2


def test_contract_violations_raise():
    with pytest.raises(ValueError):
        score(RESP_WITH_COT, passing_report(), None, counting_stub())
    with pytest.raises(ValueError):
        score(RESP_WITH_COT, failing_report(), observation(), counting_stub())


def test_functional_integrity():
    assert functional_integrity(observation(error_count=0)) == 1
    assert functional_integrity(observation(error_count=1)) == 0
    assert functional_integrity(observation(error_count=100)) == 0
    with pytest.raises(ValueError):
        functional_integrity(observation(stage="build"))


def test_negative_weights_rejected():
    with pytest.raises(ValueError):
        RewardWeights(gamma=-0.1)


def test_judge_failure_propagates():
    from webgen_harness.judge import JudgeClient, JudgeConfig, TransportError

    class DeadJudge(JudgeClient):
        def _complete(self, prompt, images):
            raise TransportError("endpoint gone")

    judge = DeadJudge(JudgeConfig(max_retries=0, backoff_ms=0))
    with pytest.raises(TransportError):
        score(RESP_WITH_COT, passing_report(), observation(), judge)


def test_breakdown_json_schema():
    breakdown = RewardBreakdown(
        stage=STAGE_DENSE, s_vis=4.0, s_func=1, s_cot=1,
        total=4.2, judge_calls=1, gamma=0.1, lambda_=0.1,
    )
    payload = breakdown.to_json_dict()
    assert set(payload) == {"stage", "s_vis", "s_func", "s_cot", "gamma", "lambda", "total"}
