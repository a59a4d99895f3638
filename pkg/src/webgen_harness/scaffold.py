"""Fixed project template, manifest injection, and the import graph.

The template is a pre-validated Vite/React/TypeScript skeleton vendored as a
directory tree.  Generated file actions are overlaid onto it to form the
complete project; the project's relative imports are then resolved into a
file-level dependency graph.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .manifest import WebArtifact

DEFAULT_TEMPLATE_NAME = "vite-react-typescript-starter"

# Core files every finished project must contain (post-injection).
REQUIRED_FILES = (
    "package.json",
    "vite.config.ts",
    "tailwind.config.js",
    "postcss.config.js",
    "eslint.config.js",
    "tsconfig.json",
    "tsconfig.app.json",
    "tsconfig.node.json",
    "index.html",
    "src/main.tsx",
    "src/App.tsx",
    "src/index.css",
    "src/vite-env.d.ts",
)

SOURCE_EXTENSIONS = (".ts", ".tsx", ".js", ".jsx")

# Candidate suffixes tried in order when resolving an extensionless
# relative import, mirroring the bundler's TS-first convention.
RESOLUTION_SUFFIXES = ("", ".tsx", ".ts", ".jsx", ".js", "/index.tsx", "/index.ts")

# Static import forms: `import ... from 'x'`, `export ... from 'x'`,
# side-effect `import 'x'`, `require('x')`, and literal dynamic `import('x')`.
_IMPORT_RES = (
    re.compile(r"""\bimport\s+(?:[^'"()]+?\s+from\s+)?['"]([^'"]+)['"]"""),
    re.compile(r"""\bexport\s+[^'";]*?\s+from\s+['"]([^'"]+)['"]"""),
    re.compile(r"""\brequire\s*\(\s*['"]([^'"]+)['"]\s*\)"""),
    re.compile(r"""\bimport\s*\(\s*['"]([^'"]+)['"]\s*\)"""),
)


@dataclass
class Template:
    """The fixed scaffold: file map plus required/protected path sets."""

    name: str
    files: dict[str, bytes]
    required_paths: list[str] = field(default_factory=list)
    protected_paths: list[str] = field(default_factory=list)


@dataclass
class ProjectFiles:
    """A complete project: path -> bytes, with per-file provenance."""

    files: dict[str, bytes]
    provenance: dict[str, str]  # "template" | "generated"


@dataclass
class ProjectGraph:
    """File-level import graph of a project.

    ``edges`` holds resolved (importer, imported) pairs; ``unresolved``
    holds relative specifiers with no matching file; ``externals`` holds
    bare (package) specifiers for the dependency check.
    """

    nodes: set[str]
    edges: set[tuple[str, str]]
    unresolved: list[tuple[str, str]]
    externals: list[tuple[str, str]] = field(default_factory=list)


def default_template_path() -> Path:
    """Path of the vendored starter template shipped with the package."""
    return Path(str(resources.files("webgen_harness") / "templates" / DEFAULT_TEMPLATE_NAME))


def load_template(
    path: str | Path | None = None,
    name: str | None = None,
    required_paths: list[str] | None = None,
    protected_paths: list[str] | None = None,
) -> Template:
    """Load a template directory tree into memory.

    With no arguments, loads the vendored starter.  ``required_paths``
    defaults to the core-file list; ``protected_paths`` defaults to every
    template file (overriding them is allowed but noted by the verifier).
    """
    root = Path(path) if path is not None else default_template_path()
    if not root.is_dir():
        raise FileNotFoundError(f"template directory not found: {root}")
    files = {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }
    required = list(required_paths) if required_paths is not None else [
        p for p in REQUIRED_FILES if p in files
    ]
    missing = [p for p in required if p not in files]
    if missing:
        raise ValueError(f"template {root} lacks required files: {missing}")
    return Template(
        name=name or root.name,
        files=files,
        required_paths=required,
        protected_paths=list(protected_paths) if protected_paths is not None else sorted(files),
    )


def inject(template: Template, artifact: WebArtifact) -> ProjectFiles:
    """Overlay the manifest's file actions onto the template.

    Every template file is carried over; generated files win at equal
    paths (including protected ones) and new paths are added.  Shell and
    start actions are commands, not files, and do not appear.
    """
    files = dict(template.files)
    provenance = {path: "template" for path in template.files}
    for action in artifact.file_actions():
        assert action.path is not None
        files[action.path] = action.content.encode("utf-8")
        provenance[action.path] = "generated"
    return ProjectFiles(files=files, provenance=provenance)


def build_graph(project: ProjectFiles) -> ProjectGraph:
    """Extract and resolve import specifiers across the project's sources.

    Relative specifiers are resolved against the candidate-suffix order
    (CSS only exactly); failures land in ``unresolved``.  Bare specifiers
    are collected as ``externals`` for the dependency rule.
    """
    nodes = set(project.files)
    edges: set[tuple[str, str]] = set()
    unresolved: list[tuple[str, str]] = []
    externals: list[tuple[str, str]] = []

    for path in sorted(project.files):
        if not path.endswith(SOURCE_EXTENSIONS):
            continue
        source = project.files[path].decode("utf-8", errors="replace")
        for spec in extract_imports(source):
            if spec.startswith(("./", "../")):
                target = _resolve_relative(path, spec, nodes)
                if target is None:
                    unresolved.append((path, spec))
                else:
                    edges.add((path, target))
            else:
                externals.append((path, spec))

    return ProjectGraph(nodes=nodes, edges=edges, unresolved=unresolved, externals=externals)


def extract_imports(source: str) -> list[str]:
    """Collect import specifiers from one source file, in document order."""
    found: list[tuple[int, str]] = []
    seen_spans: set[tuple[int, int]] = set()
    for pattern in _IMPORT_RES:
        for m in pattern.finditer(source):
            if m.span() not in seen_spans:
                seen_spans.add(m.span())
                found.append((m.start(), m.group(1)))
    return [spec for _, spec in sorted(found)]


def _resolve_relative(importer: str, spec: str, nodes: set[str]) -> str | None:
    """Resolve a relative specifier to a project path, or None."""
    base = _join_relative(importer, spec)
    if base is None:
        return None
    if spec.endswith(".css"):
        return base if base in nodes else None
    for suffix in RESOLUTION_SUFFIXES:
        candidate = base + suffix
        if candidate in nodes:
            return candidate
    return None


def _join_relative(importer: str, spec: str) -> str | None:
    """Join a specifier onto the importer's directory, staying inside the root."""
    import posixpath

    joined = posixpath.normpath(posixpath.join(posixpath.dirname(importer), spec))
    if joined.startswith("../") or joined == "..":
        return None
    return joined
