"""Sandboxed execution of a project: install, build, serve, render.

Each project is materialized into a fresh directory with its own TCP port,
then driven through the four pipeline stages strictly in order.  Any stage
failure stops the pipeline and is recorded on the observation rather than
raised; only environment faults (unusable renderer, missing toolchain)
surface as :class:`EnvError`.  The serve process never outlives the call.

Installs share one package-manager cache, and finished ``node_modules``
trees are snapshotted per dependency set so later sandboxes with the same
dependencies start warm (hardlinked when possible).
"""

from __future__ import annotations

import hashlib
import http.client
import json
import logging
import os
import re
import shutil
import signal
import socket
import subprocess
import tempfile
import threading
import time
import uuid
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from .render import EnvError, RenderError, Renderer, make_renderer
from .scaffold import ProjectFiles

logger = logging.getLogger(__name__)

STAGES = ("install", "build", "serve", "render")
STAGE_DONE = "done"

# One hit per matching runtime-log line; browser console errors are counted
# separately.  Override via PipelineConfig.error_patterns.
DEFAULT_ERROR_PATTERNS = ("ERROR", "Error:", "error TS", "npm ERR!", "Failed to", "Uncaught ")

# Serve commands that accept vite-style port flags appended after `--`.
_NPM_RUN_RE = re.compile(r"^\s*(npm|pnpm|bun)\s+run\s+\S+|^\s*yarn\s+(run\s+)?\S+")
_VITE_RE = re.compile(r"^\s*(npx\s+)?vite\b")


class PortExhausted(Exception):
    """No free TCP port could be allocated for the sandbox."""


@dataclass
class PipelineConfig:
    """Knobs for one sandbox run; defaults suit the vendored template."""

    workdir: Path = field(default_factory=lambda: Path(tempfile.gettempdir()) / "webgen-sandboxes")
    install_command: str = "npm install"
    build_command: str = "npm run build"
    serve_command: str | None = None  # falls back to the manifest start action
    routes: tuple[str, ...] = ("/",)
    install_timeout: float = 300.0
    build_timeout: float = 180.0
    serve_ready_timeout: float = 60.0
    settle_delay_ms: int = 2000
    viewport: tuple[int, int] = (1280, 800)
    max_concurrent: int = 4
    renderer: str = "auto"  # auto | stub | cdp
    browser_endpoint: str | None = None
    error_patterns: tuple[str, ...] = DEFAULT_ERROR_PATTERNS
    cache_dir: Path | None = None
    offline: bool = False
    host: str = "127.0.0.1"

    def __post_init__(self) -> None:
        self.workdir = Path(self.workdir)
        if min(self.install_timeout, self.build_timeout, self.serve_ready_timeout) <= 0:
            raise ValueError("timeouts must be positive")
        if not self.routes:
            raise ValueError("routes must be non-empty")
        if self.max_concurrent < 1:
            raise ValueError("max_concurrent must be >= 1")

    def effective_cache_dir(self) -> Path:
        return Path(self.cache_dir) if self.cache_dir else self.workdir / ".cache"


@dataclass
class SandboxHandle:
    """A materialized project directory and its allocated serving port."""

    path: Path
    port: int


@dataclass
class Observation:
    """Everything Phase II produced, up to the stage it reached."""

    screenshots: dict[str, bytes]
    runtime_log: str
    console_log: list[dict]
    error_count: int
    stage_reached: str
    timings: dict[str, float]

    def to_json_dict(self, screenshot_paths: dict[str, str] | None = None) -> dict:
        return {
            "stage_reached": self.stage_reached,
            "error_count": self.error_count,
            "timings": self.timings,
            "screenshots": screenshot_paths
            or {route: f"shots/{route_slug(route)}.png" for route in self.screenshots},
            "console_log": self.console_log,
            "runtime_log": self.runtime_log,
        }

    def install_succeeded(self) -> bool:
        """Whether dependency resolution completed (feeds the deps-resolved fact)."""
        return "install" in self.timings and self.stage_reached != "install"


_port_lock = threading.Lock()
_recent_ports: deque[int] = deque(maxlen=128)


def allocate_port(host: str = "127.0.0.1", attempts: int = 64) -> int:
    """Pick a free TCP port, avoiding recently handed-out ones."""
    for _ in range(attempts):
        with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as sock:
            sock.bind((host, 0))
            port = sock.getsockname()[1]
        with _port_lock:
            if port in _recent_ports:
                continue
            _recent_ports.append(port)
        return port
    raise PortExhausted(f"no free port after {attempts} attempts")


def route_slug(route: str) -> str:
    slug = route.strip("/").replace("/", "-")
    return slug or "root"


def materialize(project: ProjectFiles, cfg: PipelineConfig) -> SandboxHandle:
    """Write the project into a fresh isolated directory with its own port."""
    cfg.workdir.mkdir(parents=True, exist_ok=True)
    sandbox = cfg.workdir / uuid.uuid4().hex[:12]
    sandbox.mkdir(parents=True, exist_ok=False)
    for rel_path, content in project.files.items():
        target = sandbox / rel_path
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(content)
    port = allocate_port(cfg.host)
    logger.info("materialized %d files into %s (port %d)", len(project.files), sandbox, port)
    return SandboxHandle(path=sandbox, port=port)


def run_pipeline(
    handle: SandboxHandle,
    cfg: PipelineConfig,
    serve_command: str | None = None,
    renderer: Renderer | None = None,
) -> Observation:
    """Drive install -> build -> serve -> render over a materialized sandbox.

    Returns an observation for every outcome: ``stage_reached`` names the
    failed stage (or ``done``), logs cover everything up to that point,
    and the serve process is always terminated before returning.
    """
    serve_cmd = serve_command or cfg.serve_command or "npm run dev"
    env = _child_env(cfg, handle.port)
    log_parts: list[str] = []
    timings: dict[str, float] = {}
    console_log: list[dict] = []
    screenshots: dict[str, bytes] = {}

    def finish(stage: str) -> Observation:
        runtime_log = "\n".join(log_parts)
        obs = Observation(
            screenshots=screenshots,
            runtime_log=runtime_log,
            console_log=console_log,
            error_count=classify_errors(runtime_log, console_log, cfg.error_patterns),
            stage_reached=stage,
            timings=timings,
        )
        _write_observation(handle.path, obs)
        return obs

    # install
    _restore_node_modules(handle.path, cfg)
    ok, output, timings["install"] = _run_stage(cfg.install_command, handle.path, cfg.install_timeout, env)
    log_parts.append(output)
    if not ok:
        return finish("install")
    _snapshot_node_modules(handle.path, cfg)

    # build
    ok, output, timings["build"] = _run_stage(cfg.build_command, handle.path, cfg.build_timeout, env)
    log_parts.append(output)
    if not ok:
        return finish("build")

    # serve + render, with the dev server confined to this block
    serve_proc: subprocess.Popen | None = None
    serve_lines: list[str] = []
    started = time.monotonic()
    try:
        serve_proc, serve_lines = _spawn_serve(serve_cmd, handle, cfg, env)
        ready = _wait_until_ready(serve_proc, handle, cfg)
        timings["serve"] = time.monotonic() - started
        if not ready:
            log_parts.append(_serve_log(serve_cmd, serve_lines))
            return finish("serve")

        active_renderer = renderer or make_renderer(
            cfg.renderer,
            browser_endpoint=cfg.browser_endpoint,
            viewport=cfg.viewport,
            settle_ms=cfg.settle_delay_ms,
        )
        render_started = time.monotonic()
        try:
            for route in cfg.routes:
                url = f"http://{cfg.host}:{handle.port}{route if route.startswith('/') else '/' + route}"
                png, entries = active_renderer.capture(url)
                screenshots[route] = png
                console_log.extend({**entry, "route": route} for entry in entries)
                shot_path = handle.path / "shots" / f"{route_slug(route)}.png"
                shot_path.parent.mkdir(exist_ok=True)
                shot_path.write_bytes(png)
        except RenderError as e:
            timings["render"] = time.monotonic() - render_started
            log_parts.append(_serve_log(serve_cmd, serve_lines))
            log_parts.append(f"render failed: {e}")
            return finish("render")
        timings["render"] = time.monotonic() - render_started
        log_parts.append(_serve_log(serve_cmd, serve_lines))
        return finish(STAGE_DONE)
    finally:
        if serve_proc is not None:
            _terminate(serve_proc)


def run_lint(
    handle: SandboxHandle, cfg: PipelineConfig, command: str = "npm run lint",
) -> tuple[bool, str]:
    """Run the project's lint script in an installed sandbox.

    Returns (passed, output); feeds the lint-pass fact on benchmark task
    records.  Uses the build timeout.
    """
    env = _child_env(cfg, handle.port)
    ok, output, _ = _run_stage(command, handle.path, cfg.build_timeout, env)
    return ok, output


def classify_errors(
    runtime_log: str,
    console_log: list[dict],
    patterns: tuple[str, ...] = DEFAULT_ERROR_PATTERNS,
) -> int:
    """Count errors: console entries at error level plus matching log lines.

    Warnings never count.  Pure in its inputs, so observations can be
    re-classified offline with different patterns.
    """
    count = sum(1 for entry in console_log if entry.get("level") == "error")
    count += sum(
        1 for line in runtime_log.splitlines() if any(p in line for p in patterns)
    )
    return count


# ---------------------------------------------------------------------------
# stage internals


def _run_stage(command: str, cwd: Path, timeout: float, env: dict) -> tuple[bool, str, float]:
    started = time.monotonic()
    header = f"$ {command}"
    try:
        proc = subprocess.run(
            command, shell=True, cwd=cwd, env=env,
            capture_output=True, text=True, timeout=timeout,
        )
        duration = time.monotonic() - started
        body = (proc.stdout or "") + (proc.stderr or "")
        output = f"{header}\n{body}[exit {proc.returncode}]"
        return proc.returncode == 0, output, duration
    except subprocess.TimeoutExpired as e:
        duration = time.monotonic() - started
        body = _decode(e.stdout) + _decode(e.stderr)
        output = f"{header}\n{body}[timed out after {timeout:.0f}s]"
        return False, output, duration


def _spawn_serve(
    command: str, handle: SandboxHandle, cfg: PipelineConfig, env: dict,
) -> tuple[subprocess.Popen, list[str]]:
    full_command = _with_port_args(command, handle.port, cfg.host)
    proc = subprocess.Popen(
        full_command, shell=True, cwd=handle.path, env=env,
        stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True,
        start_new_session=True,
    )
    lines: list[str] = []

    def pump() -> None:
        assert proc.stdout is not None
        for line in proc.stdout:
            lines.append(line.rstrip("\n"))

    threading.Thread(target=pump, daemon=True).start()
    return proc, lines


def _with_port_args(command: str, port: int, host: str) -> str:
    """Pin vite-style dev servers to the allocated port.

    PORT is always in the environment; commands that reach vite also get
    explicit flags since vite ignores PORT.
    """
    if _NPM_RUN_RE.match(command):
        return f"{command} -- --port {port} --strictPort --host {host}"
    if _VITE_RE.match(command):
        return f"{command} --port {port} --strictPort --host {host}"
    return command


def _wait_until_ready(proc: subprocess.Popen, handle: SandboxHandle, cfg: PipelineConfig) -> bool:
    """Readiness = process alive + TCP accept + HTTP 200 on /."""
    deadline = time.monotonic() + cfg.serve_ready_timeout
    while time.monotonic() < deadline:
        if proc.poll() is not None:
            return False
        try:
            with socket.create_connection((cfg.host, handle.port), timeout=1.0):
                pass
        except OSError:
            time.sleep(0.2)
            continue
        try:
            conn = http.client.HTTPConnection(cfg.host, handle.port, timeout=5.0)
            conn.request("GET", "/")
            status = conn.getresponse().status
            conn.close()
            if status == 200:
                return True
        except OSError:
            pass
        time.sleep(0.2)
    return False


def _terminate(proc: subprocess.Popen) -> None:
    """Kill the serve process group; no member may outlive the pipeline."""
    try:
        pgid = os.getpgid(proc.pid)
    except ProcessLookupError:
        proc.wait()
        return
    for sig in (signal.SIGTERM, signal.SIGKILL):
        try:
            os.killpg(pgid, sig)
        except (ProcessLookupError, PermissionError):
            break
        deadline = time.monotonic() + 5.0
        while time.monotonic() < deadline:
            if proc.poll() is not None and not _group_alive(pgid):
                return
            time.sleep(0.05)
    proc.wait(timeout=5.0)


def _group_alive(pgid: int) -> bool:
    """True while the group has a running (non-zombie) member.

    Zombies hold no sockets and may never be reaped when PID 1 is not a
    reaper, so they do not count.  Falls back to the signal-0 probe when
    /proc is unavailable.
    """
    proc_root = Path("/proc")
    if proc_root.is_dir():
        for entry in proc_root.iterdir():
            if not entry.name.isdigit():
                continue
            try:
                stat = (entry / "stat").read_text()
            except OSError:
                continue
            fields = stat.rsplit(")", 1)[-1].split()
            if len(fields) >= 3 and fields[0] != "Z" and int(fields[2]) == pgid:
                return True
        return False
    try:
        os.killpg(pgid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


def _serve_log(command: str, lines: list[str]) -> str:
    return f"$ {command}\n" + "\n".join(lines)


def _child_env(cfg: PipelineConfig, port: int) -> dict:
    env = os.environ.copy()
    env["PORT"] = str(port)
    env["NO_COLOR"] = "1"
    env["FORCE_COLOR"] = "0"
    cache = cfg.effective_cache_dir()
    cache.mkdir(parents=True, exist_ok=True)
    env["npm_config_cache"] = str(cache / "npm")
    env["npm_config_fund"] = "false"
    env["npm_config_audit"] = "false"
    env["npm_config_progress"] = "false"
    env["npm_config_update_notifier"] = "false"
    if cfg.offline:
        env["npm_config_offline"] = "true"
    return env


def _decode(stream: bytes | str | None) -> str:
    if stream is None:
        return ""
    if isinstance(stream, bytes):
        return stream.decode("utf-8", errors="replace")
    return stream


# ---------------------------------------------------------------------------
# node_modules snapshot cache


def _dependency_hash(sandbox: Path) -> str | None:
    package_json = sandbox / "package.json"
    if not package_json.is_file():
        return None
    try:
        pkg = json.loads(package_json.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError):
        return None
    key = json.dumps(
        {
            "dependencies": pkg.get("dependencies", {}),
            "devDependencies": pkg.get("devDependencies", {}),
        },
        sort_keys=True,
    )
    return hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]


def _restore_node_modules(sandbox: Path, cfg: PipelineConfig) -> None:
    dep_hash = _dependency_hash(sandbox)
    if dep_hash is None or (sandbox / "node_modules").exists():
        return
    snapshot = cfg.effective_cache_dir() / "node_modules" / dep_hash
    if not snapshot.is_dir():
        return
    try:
        _copy_tree(snapshot, sandbox / "node_modules")
        logger.info("restored node_modules snapshot %s", dep_hash)
    except OSError as e:
        logger.warning("snapshot restore failed (%s); installing from scratch", e)
        shutil.rmtree(sandbox / "node_modules", ignore_errors=True)


def _snapshot_node_modules(sandbox: Path, cfg: PipelineConfig) -> None:
    dep_hash = _dependency_hash(sandbox)
    modules = sandbox / "node_modules"
    if dep_hash is None or not modules.is_dir():
        return
    snapshot = cfg.effective_cache_dir() / "node_modules" / dep_hash
    if snapshot.exists():
        return
    staging = snapshot.with_name(snapshot.name + ".tmp-" + uuid.uuid4().hex[:8])
    try:
        _copy_tree(modules, staging)
        staging.rename(snapshot)
        logger.info("stored node_modules snapshot %s", dep_hash)
    except OSError as e:
        logger.warning("snapshot store failed: %s", e)
        shutil.rmtree(staging, ignore_errors=True)


def _copy_tree(src: Path, dst: Path) -> None:
    dst.parent.mkdir(parents=True, exist_ok=True)
    try:
        shutil.copytree(src, dst, symlinks=True, copy_function=os.link)
    except OSError:
        shutil.rmtree(dst, ignore_errors=True)
        shutil.copytree(src, dst, symlinks=True)


def _write_observation(sandbox: Path, obs: Observation) -> None:
    try:
        (sandbox / "observation.json").write_text(
            json.dumps(obs.to_json_dict(), indent=2), encoding="utf-8",
        )
    except OSError as e:
        logger.warning("could not write observation.json: %s", e)
