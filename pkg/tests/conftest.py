from __future__ import annotations

from pathlib import Path

import pytest

from webgen_harness import load_template, parse_response

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def template():
    return load_template()


@pytest.fixture(scope="session")
def starter_response_text() -> str:
    return (FIXTURES / "starter_response.txt").read_text(encoding="utf-8")


@pytest.fixture()
def starter_response(starter_response_text):
    return parse_response(starter_response_text)


def pytest_runtest_logreport(report):
    """Print one PASS/FAIL line per acceptance criterion."""
    if "test_acceptance" not in report.nodeid or report.when != "call":
        return
    name = report.nodeid.split("::", 1)[-1]
    outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    print(f"\n[acceptance] {name}: {outcome}", flush=True)
