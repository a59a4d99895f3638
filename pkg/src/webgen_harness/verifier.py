"""Static compliance verification of parsed projects.

Phase I of the evaluation pipeline: a fixed registry of rules over the
response envelope, the manifest, and the post-injection project.  Every
rule is evaluated (no short-circuiting) so reports stay diagnostic; the
pass flag reflects fatal rules only and feeds the 0/1 indicator that
gates execution.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Callable

from .manifest import ModelResponse, ParseError, WebArtifact
from .scaffold import ProjectFiles, ProjectGraph, REQUIRED_FILES, Template

FATAL = "fatal"
WARNING = "warning"

CATEGORIES = ("structure", "files", "commands", "content")

# Dependencies shipped by the starter's package.json; imports of these are
# considered declared even if a generated package.json drops them.
ALWAYS_DECLARED = frozenset({
    "lucide-react",
    "react",
    "react-dom",
    "react-router-dom",
    "@eslint/js",
    "@types/react",
    "@types/react-dom",
    "@vitejs/plugin-react",
    "autoprefixer",
    "eslint",
    "eslint-plugin-react-hooks",
    "eslint-plugin-react-refresh",
    "globals",
    "postcss",
    "tailwindcss",
    "typescript",
    "typescript-eslint",
    "vite",
})

NODE_BUILTINS = frozenset({
    "assert", "buffer", "child_process", "crypto", "dns", "events", "fs",
    "http", "https", "net", "os", "path", "process", "querystring",
    "stream", "tls", "url", "util", "zlib",
})

# Banned component-library spellings, matched as substrings of imports and
# dependency names.
SHADCN_VARIANTS = ("shadcn/ui", "shadcn-ui", "shadcnui")

# The tailwind content globs the scaffold mandates.
TAILWIND_GLOBS = ('"./index.html"', '"./src/**/*.{js,ts,jsx,tsx}"')

_INSTALL_COMMAND_RE = re.compile(r"\b(npm (install|ci)|yarn( install)?|pnpm install|bun install)\b")
_EXPORT_RE = re.compile(r"\bexport\s+(default|const|function|class|\{|\*)")


@dataclass
class Rule:
    """One registered compliance rule."""

    id: str
    category: str
    severity: str
    description: str


@dataclass
class Violation:
    rule: str
    severity: str
    message: str
    path: str | None = None


@dataclass
class ComplianceReport:
    """Outcome of Phase-I verification; ``passed`` ignores warnings."""

    passed: bool
    violations: list[Violation] = field(default_factory=list)
    notices: list[str] = field(default_factory=list)

    def fatal_violations(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == FATAL]

    def to_json_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violations": [
                {"rule": v.rule, "severity": v.severity, "message": v.message, "path": v.path}
                for v in self.violations
            ],
            "notices": list(self.notices),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


@dataclass
class _Context:
    resp: ModelResponse | None
    artifact: WebArtifact | None
    error: ParseError | None
    project: ProjectFiles | None
    graph: ProjectGraph | None
    template: Template | None
    strict_files: bool
    package_json: dict | None = None
    notices: list[str] = field(default_factory=list)


_Check = Callable[[_Context], list[Violation]]
_REGISTRY: list[tuple[Rule, _Check]] = []


def _rule(id: str, category: str, severity: str, description: str):
    def register(fn: _Check) -> _Check:
        if any(r.id == id for r, _ in _REGISTRY):
            raise ValueError(f"duplicate rule id {id}")
        _REGISTRY.append((Rule(id, category, severity, description), fn))
        return fn

    return register


def registry() -> list[Rule]:
    """The rule registry in evaluation order."""
    return [rule for rule, _ in _REGISTRY]


def verify(
    resp: ModelResponse | None,
    artifact: WebArtifact | ParseError | None,
    project: ProjectFiles | None = None,
    graph: ProjectGraph | None = None,
    *,
    template: Template | None = None,
    strict_files: bool = False,
) -> ComplianceReport:
    """Evaluate every registered rule and assemble the full report.

    On a manifest :class:`ParseError` the project and graph are absent and
    rules that need them are skipped; the parse violation alone fails the
    report.  With ``strict_files`` the required core files must appear in
    the manifest itself rather than being satisfied by the template
    overlay.
    """
    error = artifact if isinstance(artifact, ParseError) else None
    ctx = _Context(
        resp=resp,
        artifact=artifact if isinstance(artifact, WebArtifact) else None,
        error=error,
        project=project,
        graph=graph,
        template=template,
        strict_files=strict_files,
    )
    if ctx.project is not None and "package.json" in ctx.project.files:
        try:
            parsed = json.loads(ctx.project.files["package.json"].decode("utf-8", errors="replace"))
            ctx.package_json = parsed if isinstance(parsed, dict) else None
        except json.JSONDecodeError:
            ctx.package_json = None

    violations: list[Violation] = []
    for _, check in _REGISTRY:
        violations.extend(check(ctx))

    _collect_notices(ctx)
    passed = not any(v.severity == FATAL for v in violations)
    return ComplianceReport(passed=passed, violations=violations, notices=ctx.notices)


def indicator(report: ComplianceReport) -> int:
    """The 0/1 gate for Phase II: 1 iff the report passed."""
    return 1 if report.passed else 0


def category_indicators(report: ComplianceReport) -> dict[str, int]:
    """Per-category pass indicators; their product must equal ``indicator``."""
    result = {}
    for category in CATEGORIES:
        fatal = any(
            v.severity == FATAL and v.rule.startswith(category + ".")
            for v in report.violations
        )
        result[category] = 0 if fatal else 1
    return result


# ---------------------------------------------------------------------------
# structure rules


@_rule("structure.answer.present", "structure", FATAL, "response contains an <answer> block")
def _check_answer_present(ctx: _Context) -> list[Violation]:
    if ctx.resp is not None and ctx.resp.answer is None:
        return [_v("structure.answer.present", FATAL, "response has no <answer> block")]
    return []


@_rule("structure.artifact.parses", "structure", FATAL, "answer parses as a webArtifact manifest")
def _check_artifact_parses(ctx: _Context) -> list[Violation]:
    if ctx.error is not None:
        return [_v(
            "structure.artifact.parses",
            FATAL,
            f"manifest failed to parse ({ctx.error.code}): {ctx.error}",
        )]
    return []


@_rule("structure.start.single", "structure", FATAL, "manifest declares at most one start action")
def _check_single_start(ctx: _Context) -> list[Violation]:
    if ctx.artifact is None:
        return []
    starts = [a for a in ctx.artifact.actions if a.kind == "start"]
    if len(starts) > 1:
        return [_v(
            "structure.start.single",
            FATAL,
            f"manifest declares {len(starts)} start actions",
        )]
    return []


# ---------------------------------------------------------------------------
# files rules (one per required core file)


def _required_file_check(path: str) -> _Check:
    rule_id = "files.required." + re.sub(r"[./-]", "_", path)

    def check(ctx: _Context) -> list[Violation]:
        if ctx.project is None:
            return []
        if ctx.strict_files:
            if ctx.artifact is None:
                return []
            present = any(a.path == path for a in ctx.artifact.file_actions())
            if not present and path == "index.html":
                present = any(a.path == "public/index.html" for a in ctx.artifact.file_actions())
        else:
            present = path in ctx.project.files
            if not present and path == "index.html":
                present = "public/index.html" in ctx.project.files
        if not present:
            return [_v(rule_id, FATAL, f"required file {path} is missing", path=path)]
        return []

    return check


for _path in REQUIRED_FILES:
    _rule(
        "files.required." + re.sub(r"[./-]", "_", _path),
        "files",
        FATAL,
        f"project contains {_path}",
    )(_required_file_check(_path))


# ---------------------------------------------------------------------------
# commands rules


@_rule("commands.install.present", "commands", FATAL, "manifest includes an install command")
def _check_install_command(ctx: _Context) -> list[Violation]:
    if ctx.artifact is None:
        return []
    for action in ctx.artifact.shell_actions():
        if _INSTALL_COMMAND_RE.search(action.content):
            return []
    return [_v("commands.install.present", FATAL, "no shell action runs an install command")]


@_rule("commands.start.present", "commands", FATAL, "manifest includes a start action")
def _check_start_command(ctx: _Context) -> list[Violation]:
    if ctx.artifact is None:
        return []
    if ctx.artifact.start_action() is None:
        return [_v("commands.start.present", FATAL, "manifest has no start action")]
    return []


# ---------------------------------------------------------------------------
# content rules


@_rule("content.package_json.invalid", "content", FATAL, "package.json parses as JSON")
def _check_package_json_parses(ctx: _Context) -> list[Violation]:
    if ctx.project is None or "package.json" not in ctx.project.files:
        return []
    if ctx.package_json is None:
        return [_v(
            "content.package_json.invalid",
            FATAL,
            "package.json is not valid JSON",
            path="package.json",
        )]
    return []


@_rule(
    "content.package_json.fields",
    "content",
    FATAL,
    "package.json declares name, dev/build scripts, and dependencies",
)
def _check_package_json_fields(ctx: _Context) -> list[Violation]:
    pkg = ctx.package_json
    if pkg is None:
        return []
    missing = [key for key in ("name", "dependencies") if key not in pkg]
    scripts = pkg.get("scripts")
    if not isinstance(scripts, dict):
        missing.append("scripts")
    else:
        missing.extend(f"scripts.{s}" for s in ("dev", "build") if s not in scripts)
    if missing:
        return [_v(
            "content.package_json.fields",
            FATAL,
            f"package.json lacks required fields: {', '.join(missing)}",
            path="package.json",
        )]
    return []


@_rule("content.css.extra", "content", FATAL, "src/index.css is the only stylesheet")
def _check_single_stylesheet(ctx: _Context) -> list[Violation]:
    if ctx.project is None:
        return []
    extras = sorted(
        p for p in ctx.project.files if p.endswith(".css") and p != "src/index.css"
    )
    return [
        _v("content.css.extra", FATAL, f"stylesheet outside src/index.css: {p}", path=p)
        for p in extras
    ]


@_rule("content.deps.shadcn", "content", FATAL, "no shadcn imports or dependencies")
def _check_shadcn(ctx: _Context) -> list[Violation]:
    violations = []
    for name in _dependency_names(ctx):
        if any(variant in name for variant in SHADCN_VARIANTS):
            violations.append(_v(
                "content.deps.shadcn", FATAL, f"banned dependency {name!r}", path="package.json",
            ))
    if ctx.graph is not None:
        for importer, spec in ctx.graph.externals:
            if any(variant in spec for variant in SHADCN_VARIANTS):
                violations.append(_v(
                    "content.deps.shadcn", FATAL, f"banned import {spec!r}", path=importer,
                ))
    return violations


@_rule("content.imports.unresolved", "content", FATAL, "every relative import resolves to a file")
def _check_unresolved_imports(ctx: _Context) -> list[Violation]:
    if ctx.graph is None:
        return []
    return [
        _v(
            "content.imports.unresolved",
            FATAL,
            f"unresolved import {spec!r} in {importer}",
            path=importer,
        )
        for importer, spec in ctx.graph.unresolved
    ]


@_rule(
    "content.imports.undeclared",
    "content",
    WARNING,
    "bare imports map to declared dependencies or built-ins",
)
def _check_undeclared_imports(ctx: _Context) -> list[Violation]:
    if ctx.graph is None or ctx.package_json is None:
        return []
    declared = _dependency_names(ctx) | ALWAYS_DECLARED
    violations = []
    flagged: set[str] = set()
    for importer, spec in ctx.graph.externals:
        package = _package_name(spec)
        if package in flagged:
            continue
        if package in declared or package in NODE_BUILTINS or package.startswith("node:"):
            continue
        flagged.add(package)
        violations.append(_v(
            "content.imports.undeclared",
            WARNING,
            f"import {spec!r} has no declared dependency {package!r}",
            path=importer,
        ))
    return violations


@_rule(
    "content.tailwind.globs",
    "content",
    WARNING,
    "tailwind.config.js scans the mandated content globs",
)
def _check_tailwind_globs(ctx: _Context) -> list[Violation]:
    if ctx.project is None or "tailwind.config.js" not in ctx.project.files:
        return []
    config = ctx.project.files["tailwind.config.js"].decode("utf-8", errors="replace")
    missing = [glob for glob in TAILWIND_GLOBS if glob not in config]
    if missing:
        return [_v(
            "content.tailwind.globs",
            WARNING,
            f"tailwind content globs missing {', '.join(missing)}",
            path="tailwind.config.js",
        )]
    return []


@_rule(
    "content.exports.component",
    "content",
    WARNING,
    "App and page components export a component",
)
def _check_component_exports(ctx: _Context) -> list[Violation]:
    if ctx.project is None:
        return []
    targets = [p for p in ctx.project.files
               if p == "src/App.tsx" or (p.startswith("src/pages/") and p.endswith((".tsx", ".jsx")))]
    violations = []
    for path in sorted(targets):
        source = ctx.project.files[path].decode("utf-8", errors="replace")
        if not _EXPORT_RE.search(source):
            violations.append(_v(
                "content.exports.component",
                WARNING,
                f"{path} has no default or named export",
                path=path,
            ))
    return violations


# ---------------------------------------------------------------------------
# helpers


def _v(rule: str, severity: str, message: str, path: str | None = None) -> Violation:
    return Violation(rule=rule, severity=severity, message=message, path=path)


def _dependency_names(ctx: _Context) -> set[str]:
    pkg = ctx.package_json or {}
    names: set[str] = set()
    for section in ("dependencies", "devDependencies"):
        value = pkg.get(section)
        if isinstance(value, dict):
            names.update(value)
    return names


def _package_name(spec: str) -> str:
    parts = spec.split("/")
    if spec.startswith("@") and len(parts) >= 2:
        return "/".join(parts[:2])
    return parts[0]


def _collect_notices(ctx: _Context) -> None:
    if ctx.artifact is not None:
        seen: set[str] = set()
        for action in ctx.artifact.file_actions():
            assert action.path is not None
            if action.path in seen:
                ctx.notices.append(f"duplicate file action for {action.path}; last occurrence wins")
            seen.add(action.path)
    if ctx.project is not None and ctx.template is not None:
        protected = set(ctx.template.protected_paths)
        for path, origin in sorted(ctx.project.provenance.items()):
            if origin == "generated" and path in protected:
                ctx.notices.append(f"generated file overrides protected template file {path}")
    if (
        ctx.project is not None
        and "index.html" not in ctx.project.files
        and "public/index.html" in ctx.project.files
    ):
        ctx.notices.append("index.html requirement satisfied by public/index.html")
