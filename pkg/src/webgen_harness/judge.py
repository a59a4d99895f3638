"""Clients for the external vision judge.

Two implementations behind one interface: an HTTP client speaking a
chat-completions-style endpoint with base64 image attachments, and a
deterministic stub for offline runs that answers from on-disk fixtures
keyed by request hash (or a hash-derived fallback).  Retry, backoff, rate
limiting, and grade parsing live in the shared base class.
"""

from __future__ import annotations

import base64
import hashlib
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .prompts import render_aesthetic_prompt, render_suitability_prompt

logger = logging.getLogger(__name__)

_GRADE_RE = re.compile(r"grade\s*:\s*\[?\s*(\d+)", re.IGNORECASE)

API_KEY_ENV = "WEBGEN_JUDGE_API_KEY"


class JudgeError(Exception):
    """Base class for judge failures surfaced after retries."""


class TransportError(JudgeError):
    """Network or server-side failure talking to the judge."""


class RateLimitedError(JudgeError):
    """The judge endpoint rejected the request for rate reasons."""


class UnparseableError(JudgeError):
    """The judge responded but no valid grade could be extracted."""


@dataclass
class JudgeConfig:
    """Connection and retry settings for the judge client."""

    endpoint: str = ""
    model: str = ""
    max_retries: int = 3
    backoff_ms: int = 500
    rate_limit_rps: float | None = None
    temperature: float = 0.0
    timeout_s: float = 120.0
    stub_mode: bool = False
    fixtures_dir: str | Path | None = None
    stub_grade: int | None = None

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.stub_grade is not None and not 0 <= self.stub_grade <= 5:
            raise ValueError("stub_grade must be in 0..5")

    def api_key(self) -> str:
        return os.environ.get(API_KEY_ENV, "")


@dataclass
class AestheticVerdict:
    """A parsed grading response: integer grade 0..5 plus the analysis text."""

    grade: int
    analysis: str
    raw: str


def parse_grade(raw: str) -> int:
    """Extract the final "Grade: N" occurrence, requiring N in 0..5.

    Case-insensitive, tolerates a missing space and an optional bracket.
    Raises :class:`UnparseableError` when absent or out of range.
    """
    matches = _GRADE_RE.findall(raw)
    if not matches:
        raise UnparseableError("no 'Grade:' line found in judge response")
    grade = int(matches[-1])
    if not 0 <= grade <= 5:
        raise UnparseableError(f"grade {grade} outside 0..5")
    return grade


class _TokenBucket:
    """Blocking requests-per-second limiter shared across threads."""

    def __init__(self, rps: float):
        self._interval = 1.0 / rps
        self._lock = threading.Lock()
        self._next_free = 0.0

    def acquire(self) -> None:
        with self._lock:
            now = time.monotonic()
            wait = self._next_free - now
            self._next_free = max(now, self._next_free) + self._interval
        if wait > 0:
            time.sleep(wait)


class JudgeClient:
    """Shared retry/parse machinery; subclasses implement the transport."""

    def __init__(self, cfg: JudgeConfig | None = None):
        self.cfg = cfg or JudgeConfig()
        self._bucket = _TokenBucket(self.cfg.rate_limit_rps) if self.cfg.rate_limit_rps else None
        self.request_count = 0

    def score_aesthetics(self, screenshots: list[bytes], instruction: str) -> AestheticVerdict:
        """Grade rendered screenshots against the instruction.

        All screenshots go in a single request; retries cover transport
        failures and unparseable grades alike.
        """
        if not screenshots:
            raise ValueError("score_aesthetics requires at least one screenshot")
        prompt = render_aesthetic_prompt(instruction)
        raw = self._call_with_retries(prompt, screenshots, parse=parse_grade)
        grade = parse_grade(raw)
        return AestheticVerdict(grade=grade, analysis=_extract_analysis(raw), raw=raw)

    def judge_suitability(self, instruction_text: str) -> bool:
        """True iff the judge answers YES for the candidate instruction."""
        prompt = render_suitability_prompt(instruction_text)
        raw = self._call_with_retries(prompt, [], parse=None)
        return raw.strip().upper().startswith("YES")

    # -- internals ---------------------------------------------------------

    def _call_with_retries(self, prompt: str, images: list[bytes], parse) -> str:
        attempts = 1 + self.cfg.max_retries
        last_error: JudgeError | None = None
        for attempt in range(attempts):
            if attempt:
                delay = self.cfg.backoff_ms * (2 ** (attempt - 1)) / 1000.0
                logger.debug("judge retry %d after %.2fs: %s", attempt, delay, last_error)
                time.sleep(delay)
            if self._bucket is not None:
                self._bucket.acquire()
            self.request_count += 1
            try:
                raw = self._complete(prompt, images)
                if parse is not None:
                    parse(raw)
                return raw
            except JudgeError as e:
                last_error = e
        assert last_error is not None
        raise last_error

    def _complete(self, prompt: str, images: list[bytes]) -> str:
        raise NotImplementedError


class HttpJudge(JudgeClient):
    """Judge over an HTTP chat-completions endpoint with image parts."""

    def _complete(self, prompt: str, images: list[bytes]) -> str:
        content: list[dict] = [{"type": "text", "text": prompt}]
        for png in images:
            encoded = base64.b64encode(png).decode("ascii")
            content.append({
                "type": "image_url",
                "image_url": {"url": f"data:image/png;base64,{encoded}"},
            })
        payload = {
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [{"role": "user", "content": content}],
        }
        headers = {"Content-Type": "application/json"}
        key = self.cfg.api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = requests.post(
                self.cfg.endpoint, json=payload, headers=headers, timeout=self.cfg.timeout_s,
            )
        except requests.RequestException as e:
            raise TransportError(f"judge request failed: {e}") from e
        if resp.status_code == 429:
            raise RateLimitedError("judge endpoint rate-limited the request")
        if resp.status_code >= 400:
            raise TransportError(f"judge endpoint returned HTTP {resp.status_code}")
        try:
            body = resp.json()
            message = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise TransportError(f"malformed judge response body: {e}") from e
        if isinstance(message, list):
            message = "".join(
                part.get("text", "") for part in message if isinstance(part, dict)
            )
        return str(message)


class StubJudge(JudgeClient):
    """Offline deterministic judge keyed by request content hash.

    Responses come from ``fixtures_dir/<hash>.txt`` when present; otherwise
    a fixed grade (``stub_grade``) or a hash-derived grade is synthesized.
    Suitability falls back to a keyword check over the instruction.
    """

    _SUITABLE_HINTS = (
        "website", "web page", "webpage", "web app", "landing page", "frontend",
        "html", "css", "react", "next.js", "tailwind", "ui", "dashboard", "site",
    )

    def __init__(self, cfg: JudgeConfig | None = None):
        super().__init__(cfg)
        self.calls: list[dict] = []

    def _complete(self, prompt: str, images: list[bytes]) -> str:
        key = self.request_hash(prompt, images)
        self.calls.append({"hash": key, "images": len(images)})
        fixture = self._fixture_for(key)
        if fixture is not None:
            return fixture
        if not images:
            # Suitability call: keyword heuristic over the embedded instruction
            # only (the prompt template itself names web technologies).
            m = re.search(r'Instruction: "(.*)"\s*\Z', prompt, re.DOTALL)
            lowered = (m.group(1) if m else prompt).lower()
            return "YES" if any(hint in lowered for hint in self._SUITABLE_HINTS) else "NO"
        grade = self.cfg.stub_grade
        if grade is None:
            grade = int(key[:8], 16) % 6
        return (
            "Analysis: Deterministic stub verdict derived from the request hash; "
            "no visual model was consulted.\n"
            f"Grade: {grade}"
        )

    @staticmethod
    def request_hash(prompt: str, images: list[bytes]) -> str:
        digest = hashlib.sha256(prompt.encode("utf-8"))
        for png in images:
            digest.update(hashlib.sha256(png).digest())
        return digest.hexdigest()

    def _fixture_for(self, key: str) -> str | None:
        if self.cfg.fixtures_dir is None:
            return None
        path = Path(self.cfg.fixtures_dir) / f"{key[:16]}.txt"
        if path.is_file():
            return path.read_text(encoding="utf-8")
        return None


def make_judge(cfg: JudgeConfig) -> JudgeClient:
    """Build the configured judge client (stub or HTTP)."""
    return StubJudge(cfg) if cfg.stub_mode else HttpJudge(cfg)


def _extract_analysis(raw: str) -> str:
    """The analysis portion of a grading response (text before the final grade)."""
    last = None
    for last in _GRADE_RE.finditer(raw):
        pass
    text = raw[:last.start()] if last is not None else raw
    if "Analysis:" in text:
        text = text.split("Analysis:", 1)[1]
    return text.strip()
