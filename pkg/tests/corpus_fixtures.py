"""The verifier fixture corpus: one case per fatal rule plus the clean template.

Each case mutates the golden starter response (or constructs an artifact
directly where the parser would reject the mutation first) and pins the
exact violation ids the verifier must emit, warnings included.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from webgen_harness import (
    Action,
    ParseError,
    build_graph,
    inject,
    load_template,
    parse_artifact,
    parse_response,
    verify,
)

_FIXTURES = Path(__file__).parent / "fixtures"

_SHELL_LINE = "  <webAction type=\"shell\">npm install</webAction>"
_START_LINE = "  <webAction type=\"start\">npm run dev</webAction>"

_BROKEN_PACKAGE_JSON = "{ this is not json"

_SPARSE_PACKAGE_JSON = """{
  "name": "sparse",
  "scripts": { "dev": "vite" },
  "dependencies": {}
}"""

_SHADCN_PACKAGE_JSON = """{
  "name": "banned-deps",
  "scripts": { "dev": "vite", "build": "vite build" },
  "dependencies": { "react": "^18.3.1", "shadcn-ui": "^1.0.0" }
}"""

_APP_WITH_UNRESOLVED = """import React from 'react'
import Navbar from './components/Navbar'
function App() {
  return <Navbar />
}
export default App"""


@dataclass
class CorpusCase:
    name: str
    expected_rules: list[str]  # exact multiset of violation ids
    response_text: str | None = None
    extra_actions: list[Action] | None = None
    replace_file: tuple[str, str] | None = None  # (path, new body)
    drop_lines: list[str] | None = None
    drop_file_action: str | None = None
    strict_files: bool = False


def corpus_cases() -> list[CorpusCase]:
    return [
        CorpusCase(name="passing_template", expected_rules=[]),
        CorpusCase(
            name="missing_answer",
            response_text="<think>plan only, never an answer</think>",
            expected_rules=["structure.answer.present"],
        ),
        CorpusCase(
            name="unclosed_root",
            drop_lines=["</webArtifact>"],
            expected_rules=["structure.artifact.parses"],
        ),
        CorpusCase(
            name="two_start_actions",
            extra_actions=[Action(kind="start", content="npm run dev")],
            expected_rules=["structure.start.single"],
        ),
        CorpusCase(
            name="no_install_command",
            drop_lines=[_SHELL_LINE],
            expected_rules=["commands.install.present"],
        ),
        CorpusCase(
            name="no_start_action",
            drop_lines=[_START_LINE],
            expected_rules=["commands.start.present"],
        ),
        CorpusCase(
            name="package_json_invalid",
            replace_file=("package.json", _BROKEN_PACKAGE_JSON),
            expected_rules=["content.package_json.invalid"],
        ),
        CorpusCase(
            name="package_json_missing_fields",
            replace_file=("package.json", _SPARSE_PACKAGE_JSON),
            expected_rules=["content.package_json.fields"],
        ),
        CorpusCase(
            name="extra_stylesheet",
            extra_actions=[Action(kind="file", content="body {}", path="src/styles/global.css")],
            expected_rules=["content.css.extra"],
        ),
        CorpusCase(
            name="shadcn_dependency",
            replace_file=("package.json", _SHADCN_PACKAGE_JSON),
            expected_rules=["content.deps.shadcn"],
        ),
        CorpusCase(
            name="unresolved_import",
            replace_file=("src/App.tsx", _APP_WITH_UNRESOLVED),
            expected_rules=["content.imports.unresolved"],
        ),
        CorpusCase(
            name="strict_mode_missing_package_json",
            drop_file_action="package.json",
            strict_files=True,
            expected_rules=["files.required.package_json"],
        ),
    ]


def run_case(case: CorpusCase, starter_text: str):
    """Build the case's inputs and run verification; returns the report."""
    template = load_template()
    text = case.response_text if case.response_text is not None else starter_text
    if case.drop_lines:
        for line in case.drop_lines:
            assert line in text, f"corpus line not found: {line!r}"
            text = text.replace(line + "\n", "").replace(line, "")

    resp = parse_response(text)
    artifact = None
    project = graph = None
    if resp.answer is not None:
        try:
            artifact = parse_artifact(resp.answer)
        except ParseError as e:
            artifact = e

    if artifact is not None and not isinstance(artifact, ParseError):
        if case.replace_file:
            path, body = case.replace_file
            for action in artifact.actions:
                if action.kind == "file" and action.path == path:
                    action.content = body
                    break
            else:
                raise AssertionError(f"no file action for {path}")
        if case.drop_file_action:
            artifact.actions = [
                a for a in artifact.actions
                if not (a.kind == "file" and a.path == case.drop_file_action)
            ]
        if case.extra_actions:
            artifact.actions.extend(case.extra_actions)
        project = inject(template, artifact)
        graph = build_graph(project)

    return verify(
        resp, artifact, project, graph,
        template=template, strict_files=case.strict_files,
    )
