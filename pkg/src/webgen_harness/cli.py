"""Operator command line: compose the modules end to end.

Every subcommand prints machine-readable JSON on stdout and human logs on
stderr.  Exit codes: 0 success (and verification passed), 1 verification
failed, 2 usage errors, 3 I/O errors, 4 environment faults.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import bench, grpo, manifest, reward, scaffold, verifier
from .config import HarnessConfig, load_config
from .judge import JudgeError, make_judge
from .render import EnvError
from .sandbox import Observation, materialize, run_pipeline

logger = logging.getLogger("webgen_harness")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_ENV = 4


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, (args.log_level or "INFO").upper(), logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config, overrides=_config_overrides(args))
    except (FileNotFoundError, ValueError) as e:
        logger.error("%s", e)
        return EXIT_USAGE
    try:
        return args.handler(args, cfg)
    except FileNotFoundError as e:
        logger.error("%s", e)
        return EXIT_IO
    except OSError as e:
        logger.error("I/O failure: %s", e)
        return EXIT_IO
    except EnvError as e:
        logger.error("environment fault: %s", e)
        return EXIT_ENV
    except grpo.GroupTooSmall as e:
        logger.error("%s", e)
        return EXIT_USAGE


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="webgen-harness", description=__doc__)
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--template", help="template directory override")
    parser.add_argument("--workdir", help="sandbox working directory")
    parser.add_argument("--cache-dir", help="shared package/snapshot cache directory")
    parser.add_argument("--routes", help="comma-separated routes to render")
    parser.add_argument("--stub-judge", action="store_true", default=None,
                        help="use the deterministic offline judge")
    parser.add_argument("--offline", action="store_true", default=None,
                        help="force package installs to use the local cache")
    parser.add_argument("--stub-grade", type=int, default=None,
                        help="fixed grade for the stub judge")
    parser.add_argument("--log-level", default=None)

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="static compliance verification")
    p.add_argument("response_file")
    p.add_argument("--strict-files", action="store_true")
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("materialize", help="write the injected project to a sandbox")
    p.add_argument("response_file")
    p.set_defaults(handler=_cmd_materialize)

    p = sub.add_parser("pipeline", help="materialize and run install/build/serve/render")
    p.add_argument("response_file")
    p.set_defaults(handler=_cmd_pipeline)

    p = sub.add_parser("reward", help="full cascade: verify, execute, judge")
    p.add_argument("response_file")
    p.add_argument("instruction_file")
    p.set_defaults(handler=_cmd_reward)

    p = sub.add_parser("group", help="score a directory of responses and emit advantages")
    p.add_argument("responses_dir")
    p.add_argument("instruction_file")
    p.set_defaults(handler=_cmd_group)

    p = sub.add_parser("advantage", help="normalized advantages for a JSON reward array")
    p.add_argument("rewards_file", nargs="?", default="-")
    p.set_defaults(handler=_cmd_advantage)

    p = sub.add_parser("objective", help="group objective for a JSON batch")
    p.add_argument("batch_file", nargs="?", default="-")
    p.set_defaults(handler=_cmd_objective)

    p = sub.add_parser("evaluate", help="aggregate benchmark metrics from a run file")
    p.add_argument("--run", required=True)
    p.add_argument("--verdicts")
    p.add_argument("--partial-weight", type=float, default=0.5)
    p.add_argument("--aas-floor", type=float, default=0.0)
    p.add_argument("--exclude-failures-from-aas", action="store_true")
    p.add_argument("--out", help="also write the summary JSON to this path")
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser("judge-filter", help="suitability-filter a JSONL task file")
    p.add_argument("tasks_file")
    p.set_defaults(handler=_cmd_judge_filter)

    return parser


def _config_overrides(args: argparse.Namespace) -> dict:
    return {
        "template_path": args.template,
        "workdir": args.workdir,
        "cache_dir": args.cache_dir,
        "routes": args.routes,
        "stub_judge": args.stub_judge,
        "offline": args.offline,
        "log_level": args.log_level,
    }


# ---------------------------------------------------------------------------
# pipeline plumbing shared by verify/reward/group


def _load_and_verify(response_path: Path, cfg: HarnessConfig, strict_files: bool = False):
    """Parse, inject, graph, and verify one response file."""
    raw = response_path.read_text(encoding="utf-8")
    resp = manifest.parse_response(raw)
    template = scaffold.load_template(cfg.template_path)

    artifact: manifest.WebArtifact | manifest.ParseError | None = None
    project = graph = None
    if resp.answer is not None:
        try:
            artifact = manifest.parse_artifact(resp.answer)
        except manifest.ParseError as e:
            artifact = e
    if isinstance(artifact, manifest.WebArtifact):
        project = scaffold.inject(template, artifact)
        graph = scaffold.build_graph(project)
    report = verifier.verify(
        resp, artifact, project, graph, template=template, strict_files=strict_files,
    )
    return resp, artifact, project, graph, report


def _cmd_verify(args: argparse.Namespace, cfg: HarnessConfig) -> int:
    _, _, _, _, report = _load_and_verify(Path(args.response_file), cfg, args.strict_files)
    print(report.to_json())
    return EXIT_OK if report.passed else EXIT_FAILED


def _cmd_materialize(args: argparse.Namespace, cfg: HarnessConfig) -> int:
    _, _, project, _, _ = _load_and_verify(Path(args.response_file), cfg)
    if project is None:
        logger.error("response has no parseable manifest; nothing to materialize")
        return EXIT_FAILED
    handle = materialize(project, cfg.pipeline_config())
    print(json.dumps({"path": str(handle.path), "port": handle.port}))
    return EXIT_OK


def _cmd_pipeline(args: argparse.Namespace, cfg: HarnessConfig) -> int:
    _, artifact, project, _, _ = _load_and_verify(Path(args.response_file), cfg)
    if project is None:
        logger.error("response has no parseable manifest; nothing to run")
        return EXIT_FAILED
    pipeline_cfg = cfg.pipeline_config()
    handle = materialize(project, pipeline_cfg)
    start = artifact.start_action() if isinstance(artifact, manifest.WebArtifact) else None
    obs = run_pipeline(handle, pipeline_cfg, serve_command=start.content if start else None)
    print(json.dumps(obs.to_json_dict(), indent=2))
    return EXIT_OK if obs.stage_reached == "done" else EXIT_FAILED


def _score_response(
    response_path: Path, instruction: str, cfg: HarnessConfig,
    judge, weights,
) -> reward.RewardBreakdown:
    resp, artifact, project, _, report = _load_and_verify(response_path, cfg)
    obs: Observation | None = None
    if report.passed:
        assert project is not None
        pipeline_cfg = cfg.pipeline_config()
        handle = materialize(project, pipeline_cfg)
        start = artifact.start_action() if isinstance(artifact, manifest.WebArtifact) else None
        obs = run_pipeline(handle, pipeline_cfg, serve_command=start.content if start else None)
    return reward.score(resp, report, obs, judge, weights, instruction)


def _cmd_reward(args: argparse.Namespace, cfg: HarnessConfig) -> int:
    instruction = Path(args.instruction_file).read_text(encoding="utf-8").strip()
    judge_cfg = cfg.judge_config()
    if args.stub_grade is not None:
        judge_cfg.stub_grade = args.stub_grade
    judge = make_judge(judge_cfg)
    breakdown = _score_response(
        Path(args.response_file), instruction, cfg, judge, cfg.reward_weights(),
    )
    print(breakdown.to_json())
    return EXIT_OK


def _cmd_group(args: argparse.Namespace, cfg: HarnessConfig) -> int:
    responses_dir = Path(args.responses_dir)
    if not responses_dir.is_dir():
        raise FileNotFoundError(f"responses directory not found: {responses_dir}")
    response_files = sorted(p for p in responses_dir.iterdir() if p.is_file())
    if len(response_files) < 2:
        logger.error("group scoring needs at least 2 responses, found %d", len(response_files))
        return EXIT_USAGE
    instruction = Path(args.instruction_file).read_text(encoding="utf-8").strip()

    judge_cfg = cfg.judge_config()
    if args.stub_grade is not None:
        judge_cfg.stub_grade = args.stub_grade
    judge = make_judge(judge_cfg)
    weights = cfg.reward_weights()

    def score_one(path: Path) -> float | None:
        try:
            return _score_response(path, instruction, cfg, judge, weights).total
        except JudgeError as e:
            logger.warning("judge failed for %s; sample left unscored: %s", path.name, e)
            return None

    with ThreadPoolExecutor(max_workers=cfg.max_concurrent) as pool:
        rewards = list(pool.map(score_one, response_files))

    group = grpo.drop_unscored([p.name for p in response_files], rewards)
    if len(group.rewards) < 2:
        logger.error("fewer than 2 scored samples remain; group skipped")
        return EXIT_USAGE
    result = grpo.advantages(group.rewards)
    print(json.dumps({
        "samples": group.ids,
        "rewards": group.rewards,
        "advantages": result.advantages.tolist(),
        "mean": result.mean,
        "std": result.std,
        "degenerate": result.degenerate,
        "unscored": group.skipped,
    }, indent=2))
    return EXIT_OK


def _cmd_advantage(args: argparse.Namespace, cfg: HarnessConfig) -> int:
    rewards = json.loads(_read_input(args.rewards_file))
    result = grpo.advantages(rewards)
    print(json.dumps({
        "advantages": result.advantages.tolist(),
        "mean": result.mean,
        "std": result.std,
        "degenerate": result.degenerate,
    }, indent=2))
    return EXIT_OK


def _cmd_objective(args: argparse.Namespace, cfg: HarnessConfig) -> int:
    payload = json.loads(_read_input(args.batch_file))
    batch = grpo.GroupBatch(
        logp_theta=[np.asarray(x) for x in payload["logp_theta"]],
        logp_old=[np.asarray(x) for x in payload["logp_old"]],
        logp_ref=[np.asarray(x) for x in payload["logp_ref"]],
        rewards=payload["rewards"],
        epsilon=payload.get("epsilon", 0.2),
        beta=payload.get("beta", 0.01),
    )
    print(json.dumps({"objective": grpo.objective(batch)}))
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace, cfg: HarnessConfig) -> int:
    records = bench.load_run(args.run)
    if args.verdicts:
        verdicts = bench.ingest_verdicts(args.verdicts)
        for record in records:
            if record.task_id in verdicts:
                record.agent_verdicts = verdicts[record.task_id]
    summary = bench.summarize(
        records,
        partial_weight=args.partial_weight,
        aas_floor=args.aas_floor,
        include_failures_in_aas=not args.exclude_failures_from_aas,
    )
    output = json.dumps(summary.to_json_dict(), indent=2)
    print(output)
    if args.out:
        Path(args.out).write_text(output + "\n", encoding="utf-8")
    return EXIT_OK


def _cmd_judge_filter(args: argparse.Namespace, cfg: HarnessConfig) -> int:
    judge = make_judge(cfg.judge_config())
    results = []
    with open(args.tasks_file, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            task = json.loads(line)
            suitable = judge.judge_suitability(task.get("instruction", ""))
            results.append({"task_id": task.get("task_id"), "suitable": suitable})
    print(json.dumps(results, indent=2))
    return EXIT_OK


def _read_input(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    file_path = Path(path)
    if not file_path.is_file():
        raise FileNotFoundError(f"input file not found: {file_path}")
    return file_path.read_text(encoding="utf-8")


if __name__ == "__main__":
    sys.exit(main())
