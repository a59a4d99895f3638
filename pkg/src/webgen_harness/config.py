"""Harness configuration: file, environment, and flag layering.

A JSON config file provides the base; ``WEBGEN_*`` environment variables
override it; explicit flag values override both.  Field names in the file
match the dataclass fields below.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .judge import JudgeConfig
from .reward import RewardWeights
from .sandbox import PipelineConfig

ENV_PREFIX = "WEBGEN_"

# Environment variable -> config field.  Booleans accept 1/true/yes.
ENV_FIELDS = {
    "WEBGEN_TEMPLATE": "template_path",
    "WEBGEN_WORKDIR": "workdir",
    "WEBGEN_CACHE": "cache_dir",
    "WEBGEN_GAMMA": "gamma",
    "WEBGEN_LAMBDA": "lambda_",
    "WEBGEN_JUDGE_ENDPOINT": "judge_endpoint",
    "WEBGEN_JUDGE_MODEL": "judge_model",
    "WEBGEN_STUB_JUDGE": "stub_judge",
    "WEBGEN_JUDGE_FIXTURES": "judge_fixtures",
    "WEBGEN_BROWSER_ENDPOINT": "browser_endpoint",
    "WEBGEN_RENDERER": "renderer",
    "WEBGEN_OFFLINE": "offline",
    "WEBGEN_LOG_LEVEL": "log_level",
}

_BOOL_FIELDS = {"stub_judge", "offline"}
_FLOAT_FIELDS = {
    "gamma", "lambda_", "install_timeout", "build_timeout", "serve_ready_timeout",
}
_INT_FIELDS = {"settle_delay_ms", "max_concurrent", "viewport_width", "viewport_height"}


@dataclass
class HarnessConfig:
    """Flat operator-facing settings, expanded into per-module configs."""

    template_path: str | None = None
    workdir: str | None = None
    cache_dir: str | None = None
    routes: list[str] = field(default_factory=lambda: ["/"])
    gamma: float = 0.1
    lambda_: float = 0.1
    judge_endpoint: str = ""
    judge_model: str = ""
    stub_judge: bool = False
    judge_fixtures: str | None = None
    browser_endpoint: str | None = None
    renderer: str = "auto"
    offline: bool = False
    install_timeout: float = 300.0
    build_timeout: float = 180.0
    serve_ready_timeout: float = 60.0
    settle_delay_ms: int = 2000
    viewport_width: int = 1280
    viewport_height: int = 800
    max_concurrent: int = 4
    log_level: str = "INFO"

    def pipeline_config(self) -> PipelineConfig:
        kwargs: dict = {
            "routes": tuple(self.routes),
            "install_timeout": self.install_timeout,
            "build_timeout": self.build_timeout,
            "serve_ready_timeout": self.serve_ready_timeout,
            "settle_delay_ms": self.settle_delay_ms,
            "viewport": (self.viewport_width, self.viewport_height),
            "max_concurrent": self.max_concurrent,
            "renderer": self.renderer,
            "browser_endpoint": self.browser_endpoint,
            "offline": self.offline,
        }
        if self.workdir:
            kwargs["workdir"] = Path(self.workdir)
        if self.cache_dir:
            kwargs["cache_dir"] = Path(self.cache_dir)
        return PipelineConfig(**kwargs)

    def judge_config(self) -> JudgeConfig:
        fixtures = self.judge_fixtures
        if fixtures is None and Path("fixtures/judge").is_dir():
            fixtures = "fixtures/judge"  # conventional stub fixture location
        return JudgeConfig(
            endpoint=self.judge_endpoint,
            model=self.judge_model,
            stub_mode=self.stub_judge,
            fixtures_dir=fixtures,
        )

    def reward_weights(self) -> RewardWeights:
        return RewardWeights(gamma=self.gamma, lambda_=self.lambda_)


def load_config(
    path: str | Path | None = None,
    env: dict | None = None,
    overrides: dict | None = None,
) -> HarnessConfig:
    """Layer defaults < file < environment < explicit overrides.

    Raises ``FileNotFoundError`` when the config file or a configured
    template path is missing, and ``ValueError`` on unknown fields.
    """
    env = os.environ if env is None else env
    values: dict = {}

    if path is not None:
        file_path = Path(path)
        if not file_path.is_file():
            raise FileNotFoundError(f"config file not found: {file_path}")
        loaded = json.loads(file_path.read_text(encoding="utf-8"))
        if not isinstance(loaded, dict):
            raise ValueError(f"config file {file_path} must hold a JSON object")
        values.update(loaded)

    for env_name, field_name in ENV_FIELDS.items():
        if env_name in env:
            values[field_name] = env[env_name]

    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    known = {f.name for f in fields(HarnessConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")

    coerced = {name: _coerce(name, value) for name, value in values.items()}
    cfg = HarnessConfig(**coerced)

    if cfg.template_path and not Path(cfg.template_path).is_dir():
        raise FileNotFoundError(f"template directory not found: {cfg.template_path}")
    if cfg.gamma < 0 or cfg.lambda_ < 0:
        raise ValueError("gamma and lambda must be non-negative")
    return cfg


def _coerce(name: str, value):
    if value is None or not isinstance(value, str):
        return value
    if name in _BOOL_FIELDS:
        return value.strip().lower() in ("1", "true", "yes", "on")
    if name in _FLOAT_FIELDS:
        return float(value)
    if name in _INT_FIELDS:
        return int(value)
    if name == "routes":
        return [route.strip() for route in value.split(",") if route.strip()]
    return value
