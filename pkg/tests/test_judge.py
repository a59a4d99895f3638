from __future__ import annotations

import json

import pytest

from conftest import GOLDEN
from webgen_harness.judge import (
    HttpJudge,
    JudgeClient,
    JudgeConfig,
    RateLimitedError,
    StubJudge,
    TransportError,
    UnparseableError,
    parse_grade,
)
from webgen_harness.prompts import render_aesthetic_prompt, render_suitability_prompt

INSTRUCTION = "Create a minimalist portfolio website for a photographer."


def stub(**kwargs) -> StubJudge:
    return StubJudge(JudgeConfig(stub_mode=True, backoff_ms=0, **kwargs))


# ---------------------------------------------------------------------------
# grade parsing


@pytest.mark.parametrize("raw,expected", [
    ("Grade: 0", 0),
    ("grade:5", 5),
    ("Analysis: fine work\nGrade: 4", 4),
    ("Grade: [3]", 3),
    ("Mentions Grade: 3 early.\nGrade: 5", 5),
])
def test_parse_grade_accepts(raw, expected):
    assert parse_grade(raw) == expected


@pytest.mark.parametrize("raw", ["no grade here", "Grade: 7", "Grade: -1", ""])
def test_parse_grade_rejects(raw):
    with pytest.raises(UnparseableError):
        parse_grade(raw)


# ---------------------------------------------------------------------------
# prompt fidelity


def test_aesthetic_prompt_golden():
    rendered = render_aesthetic_prompt(INSTRUCTION)
    assert rendered == (GOLDEN / "aesthetic_prompt.txt").read_text(encoding="utf-8")


def test_suitability_prompt_golden():
    rendered = render_suitability_prompt(INSTRUCTION)
    assert rendered == (GOLDEN / "suitability_prompt.txt").read_text(encoding="utf-8")


def test_prompt_single_substitution():
    rendered = render_aesthetic_prompt("X {braces} Y")
    assert "X {braces} Y" in rendered
    assert "{instruction}" not in rendered


# ---------------------------------------------------------------------------
# stub judge


def test_stub_determinism():
    shots = [b"png-one", b"png-two"]
    first = stub().score_aesthetics(shots, INSTRUCTION)
    second = stub().score_aesthetics(shots, INSTRUCTION)
    assert first == second
    assert 0 <= first.grade <= 5


def test_stub_fixed_grade():
    verdict = stub(stub_grade=4).score_aesthetics([b"shot"], INSTRUCTION)
    assert verdict.grade == 4
    assert "Grade: 4" in verdict.raw


def test_stub_counts_calls():
    judge = stub(stub_grade=2)
    judge.score_aesthetics([b"a"], INSTRUCTION)
    judge.score_aesthetics([b"b"], INSTRUCTION)
    assert len(judge.calls) == 2


def test_stub_fixture_lookup(tmp_path):
    probe = stub(fixtures_dir=tmp_path)
    key = probe.request_hash(render_aesthetic_prompt(INSTRUCTION), [b"shot"])
    (tmp_path / f"{key[:16]}.txt").write_text(
        "Analysis: canned fixture response.\nGrade: 1", encoding="utf-8",
    )
    verdict = stub(fixtures_dir=tmp_path).score_aesthetics([b"shot"], INSTRUCTION)
    assert verdict.grade == 1
    assert "canned fixture" in verdict.analysis


@pytest.mark.parametrize("fixture_text,expected", [
    ("YES", True),
    ("NO", False),
    ("YES.", True),
    ("yes, definitely", True),
    ("NO. Unrelated to websites.", False),
])
def test_suitability_prefix_rule(tmp_path, fixture_text, expected):
    probe = stub(fixtures_dir=tmp_path)
    key = probe.request_hash(render_suitability_prompt("Some task"), [])
    (tmp_path / f"{key[:16]}.txt").write_text(fixture_text, encoding="utf-8")
    assert stub(fixtures_dir=tmp_path).judge_suitability("Some task") is expected


def test_suitability_keyword_fallback():
    assert stub().judge_suitability("Build a responsive landing page in React") is True
    assert stub().judge_suitability("Explain the proof of Fermat's little theorem") is False


def test_empty_screenshots_rejected():
    with pytest.raises(ValueError):
        stub().score_aesthetics([], INSTRUCTION)


# ---------------------------------------------------------------------------
# retry machinery


class FlakyJudge(JudgeClient):
    def __init__(self, cfg, failures, error=TransportError, response="Grade: 3"):
        super().__init__(cfg)
        self.failures = failures
        self.error = error
        self.response = response

    def _complete(self, prompt, images):
        if self.request_count <= self.failures:
            raise self.error("synthetic failure")
        return self.response


def test_retries_recover():
    judge = FlakyJudge(JudgeConfig(max_retries=3, backoff_ms=0), failures=2)
    verdict = judge.score_aesthetics([b"shot"], INSTRUCTION)
    assert verdict.grade == 3
    assert judge.request_count == 3


def test_retry_bound_exhaustion():
    judge = FlakyJudge(JudgeConfig(max_retries=2, backoff_ms=0), failures=99)
    with pytest.raises(TransportError):
        judge.score_aesthetics([b"shot"], INSTRUCTION)
    assert judge.request_count == 1 + 2


def test_unparseable_is_retried_then_raised():
    judge = FlakyJudge(
        JudgeConfig(max_retries=1, backoff_ms=0), failures=0, response="Grade: 7",
    )
    with pytest.raises(UnparseableError):
        judge.score_aesthetics([b"shot"], INSTRUCTION)
    assert judge.request_count == 2


def test_rate_limited_error_retried():
    judge = FlakyJudge(
        JudgeConfig(max_retries=1, backoff_ms=0), failures=1, error=RateLimitedError,
    )
    verdict = judge.score_aesthetics([b"shot"], INSTRUCTION)
    assert verdict.grade == 3
    assert judge.request_count == 2


# ---------------------------------------------------------------------------
# http transport


class FakeResponse:
    def __init__(self, status_code=200, body=None):
        self.status_code = status_code
        self._body = body or {}

    def json(self):
        return self._body


def test_http_judge_payload_and_parse(monkeypatch):
    seen = {}

    def fake_post(url, json=None, headers=None, timeout=None):
        seen.update(url=url, payload=json, headers=headers)
        return FakeResponse(body={
            "choices": [{"message": {"content": "Analysis: ok.\nGrade: 2"}}],
        })

    monkeypatch.setattr("webgen_harness.judge.requests.post", fake_post)
    monkeypatch.setenv("WEBGEN_JUDGE_API_KEY", "secret-key")
    judge = HttpJudge(JudgeConfig(endpoint="http://judge.test/v1/chat", model="vlm-1"))
    verdict = judge.score_aesthetics([b"\x89PNG fake"], INSTRUCTION)

    assert verdict.grade == 2
    assert seen["url"] == "http://judge.test/v1/chat"
    assert seen["headers"]["Authorization"] == "Bearer secret-key"
    assert seen["payload"]["model"] == "vlm-1"
    content = seen["payload"]["messages"][0]["content"]
    assert content[0]["type"] == "text"
    assert INSTRUCTION in content[0]["text"]
    assert content[1]["image_url"]["url"].startswith("data:image/png;base64,")


def test_http_judge_rate_limit(monkeypatch):
    calls = {"n": 0}

    def fake_post(url, **kwargs):
        calls["n"] += 1
        if calls["n"] == 1:
            return FakeResponse(status_code=429)
        return FakeResponse(body={"choices": [{"message": {"content": "Grade: 5"}}]})

    monkeypatch.setattr("webgen_harness.judge.requests.post", fake_post)
    judge = HttpJudge(JudgeConfig(endpoint="http://judge.test", max_retries=2, backoff_ms=0))
    assert judge.score_aesthetics([b"shot"], INSTRUCTION).grade == 5
    assert calls["n"] == 2


def test_http_judge_server_error(monkeypatch):
    monkeypatch.setattr(
        "webgen_harness.judge.requests.post",
        lambda url, **kwargs: FakeResponse(status_code=500),
    )
    judge = HttpJudge(JudgeConfig(endpoint="http://judge.test", max_retries=0, backoff_ms=0))
    with pytest.raises(TransportError):
        judge.judge_suitability("anything")


def test_http_judge_content_parts(monkeypatch):
    body = {"choices": [{"message": {"content": [
        {"type": "text", "text": "Analysis: split. "},
        {"type": "text", "text": "Grade: 4"},
    ]}}]}
    monkeypatch.setattr(
        "webgen_harness.judge.requests.post", lambda url, **kwargs: FakeResponse(body=body),
    )
    judge = HttpJudge(JudgeConfig(endpoint="http://judge.test"))
    assert judge.score_aesthetics([b"shot"], INSTRUCTION).grade == 4
