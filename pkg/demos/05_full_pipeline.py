"""End to end: parse, verify, materialize, install, build, serve, render, score.

Runs the real toolchain on the bundled starter response: npm installs the
dependencies (network needed on the first run; later runs reuse the shared
node_modules snapshot), vite builds, the dev server comes up on a fresh
port, and each route is captured to a PNG. The final reward comes from the
deterministic stub judge so the demo needs no API key.

Run from the repository root (roughly a minute cold, seconds warm):

    python demos/05_full_pipeline.py
"""

import shutil
import sys
import tempfile
from pathlib import Path

from webgen_harness import (
    build_graph,
    inject,
    load_template,
    materialize,
    parse_artifact,
    parse_response,
    run_pipeline,
    verify,
)
from webgen_harness.judge import JudgeConfig, StubJudge
from webgen_harness.reward import RewardWeights, score
from webgen_harness.sandbox import PipelineConfig

FIXTURE = Path(__file__).parent.parent / "tests" / "fixtures" / "starter_response.txt"


def main() -> int:
    if shutil.which("npm") is None:
        print("npm is not installed; this demo needs the node toolchain")
        return 1

    resp = parse_response(FIXTURE.read_text(encoding="utf-8"))
    template = load_template()
    artifact = parse_artifact(resp.answer)
    project = inject(template, artifact)
    graph = build_graph(project)

    report = verify(resp, artifact, project, graph, template=template)
    print("phase I (static verification):", "passed" if report.passed else "FAILED")
    if not report.passed:
        breakdown = score(resp, report, None, StubJudge(JudgeConfig(stub_mode=True)))
        print("reward:", breakdown.to_json())
        return 1

    cfg = PipelineConfig(
        workdir=Path(tempfile.gettempdir()) / "webgen-demo-sandboxes",
        cache_dir=Path.home() / ".cache" / "webgen-harness-demo",
        renderer="stub",  # set WEBGEN_BROWSER_ENDPOINT and renderer="auto" for a real browser
        settle_delay_ms=200,
    )
    handle = materialize(project, cfg)
    print(f"phase II sandbox: {handle.path} (port {handle.port})")

    obs = run_pipeline(handle, cfg, serve_command=artifact.start_action().content)
    print(f"  stage reached: {obs.stage_reached}")
    for stage, seconds in obs.timings.items():
        print(f"  {stage:<8} {seconds:6.1f}s")
    print(f"  classified errors: {obs.error_count}")
    for route, png in obs.screenshots.items():
        print(f"  screenshot {route}: {len(png) / 1024:.0f} KiB -> "
              f"{handle.path / 'shots'}")

    judge = StubJudge(JudgeConfig(stub_mode=True, stub_grade=4))
    breakdown = score(
        resp, report, obs, judge,
        RewardWeights(), instruction="Reproduce the starter scaffold faithfully.",
    )
    print("\nreward breakdown:")
    print(breakdown.to_json())
    return 0


if __name__ == "__main__":
    sys.exit(main())
