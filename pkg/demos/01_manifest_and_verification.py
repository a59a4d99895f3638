"""Parse a model response into a project manifest and statically verify it.

Walks the first half of the evaluation pipeline on the bundled starter
response: envelope split, manifest parse, template injection, import-graph
construction, and the compliance rule registry. Then breaks the project on
purpose to show how violations are reported.

Run from the repository root:

    python demos/01_manifest_and_verification.py
"""

from pathlib import Path

from webgen_harness import (
    build_graph,
    inject,
    load_template,
    parse_artifact,
    parse_response,
    verify,
)
from webgen_harness.verifier import registry

FIXTURE = Path(__file__).parent.parent / "tests" / "fixtures" / "starter_response.txt"


def main() -> None:
    raw = FIXTURE.read_text(encoding="utf-8")

    # 1. Envelope: reasoning block + answer block.
    resp = parse_response(raw)
    print("reasoning present:", resp.reasoning is not None)
    print("answer length:", len(resp.answer))

    # 2. Manifest: ordered file/shell/start actions.
    artifact = parse_artifact(resp.answer)
    print(f"\nmanifest '{artifact.title}': {len(artifact.actions)} actions")
    for action in artifact.actions[:4]:
        label = action.path if action.kind == "file" else action.content
        print(f"  {action.kind:<6} {label}")
    print("  ...")

    # 3. Injection onto the fixed template, then the import graph.
    template = load_template()
    project = inject(template, artifact)
    graph = build_graph(project)
    print(f"\nproject: {len(project.files)} files, "
          f"{len(graph.edges)} resolved imports, {len(graph.unresolved)} unresolved")

    # 4. The rule registry and a clean verification.
    print(f"\nregistry has {len(registry())} rules; first three:")
    for rule in registry()[:3]:
        print(f"  [{rule.severity:<7}] {rule.id}")
    report = verify(resp, artifact, project, graph, template=template)
    print("clean project passes:", report.passed)

    # 5. Break an import and watch the fatal violation appear.
    for action in artifact.actions:
        if action.path == "src/App.tsx":
            action.content = (
                "import Navbar from './components/Navbar'\n"
                "export default function App() { return <Navbar /> }"
            )
    project = inject(template, artifact)
    graph = build_graph(project)
    report = verify(resp, artifact, project, graph, template=template)
    print("\nafter breaking an import:")
    print("  passed:", report.passed)
    for violation in report.violations:
        print(f"  [{violation.severity}] {violation.rule}: {violation.message}")


if __name__ == "__main__":
    main()
