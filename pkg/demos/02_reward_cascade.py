"""The cascaded reward: flat zeros for broken samples, dense scores for good ones.

Builds synthetic samples at each cascade stage and scores them with the
deterministic stub judge. The point to observe: the judge is consulted
exactly once per sample that survives verification and execution, never
for failures.

Run from the repository root:

    python demos/02_reward_cascade.py
"""

from webgen_harness import parse_response
from webgen_harness.judge import JudgeConfig, StubJudge
from webgen_harness.reward import RewardWeights, score
from webgen_harness.sandbox import Observation
from webgen_harness.verifier import FATAL, ComplianceReport, Violation


def fake_observation(stage: str, error_count: int = 0) -> Observation:
    return Observation(
        screenshots={"/": b"png placeholder for " + stage.encode()},
        runtime_log="",
        console_log=[{"level": "error", "message": "boom", "route": "/"}] * error_count,
        error_count=error_count,
        stage_reached=stage,
        timings={},
    )


def main() -> None:
    judge = StubJudge(JudgeConfig(stub_mode=True, stub_grade=4))
    weights = RewardWeights()  # gamma=0.1, lambda=0.1

    with_cot = parse_response("<think>layout plan, then code</think><answer>...</answer>")
    without_cot = parse_response("<answer>...</answer>")

    failed_report = ComplianceReport(passed=False, violations=[
        Violation(rule="content.imports.unresolved", severity=FATAL, message="missing file"),
    ])
    passed_report = ComplianceReport(passed=True)

    samples = [
        ("static failure", with_cot, failed_report, None),
        ("build failure", with_cot, passed_report, fake_observation("build")),
        ("clean render + reasoning", with_cot, passed_report, fake_observation("done")),
        ("clean render, no reasoning", without_cot, passed_report, fake_observation("done")),
        ("rendered but console errors", with_cot, passed_report, fake_observation("done", 2)),
    ]

    print(f"{'sample':<32} {'stage':<12} {'s_vis':>5} {'s_func':>6} {'s_cot':>5} {'total':>6}")
    for name, resp, report, obs in samples:
        b = score(resp, report, obs, judge, weights)
        print(f"{name:<32} {b.stage:<12} {str(b.s_vis):>5} {str(b.s_func):>6} "
              f"{b.s_cot:>5} {b.total:>6.2f}")

    print(f"\njudge calls: {len(judge.calls)} "
          "(only the three samples that reached the dense stage)")


if __name__ == "__main__":
    main()
