"""Parsing of raw model responses into envelopes and project manifests.

A response carries an optional ``<think>`` reasoning block and an
``<answer>`` block whose body is an XML-like project manifest:

    <webArtifact id="unique-id" title="Project Title">
      <webAction type="file" filePath="src/App.tsx">...</webAction>
      <webAction type="shell">npm install</webAction>
      <webAction type="start">npm run dev</webAction>
    </webArtifact>

File bodies legally contain unescaped ``<``, ``>`` and JSX, so the manifest
is parsed with a purpose-built tag scanner: only the exact ``webArtifact`` /
``webAction`` open and close tags (and ``<!-- -->`` comments) are treated as
structure, everything between them is payload.
"""

from __future__ import annotations

import logging
import posixpath
import re
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

_THINK_RE = re.compile(r"<think>(.*?)</think>", re.DOTALL)
_ANSWER_RE = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)
_ARTIFACT_OPEN_RE = re.compile(r"<webArtifact\b([^>]*)>")
_ACTION_OPEN_RE = re.compile(r"<webAction\b([^>]*)>")
_ATTR_RE = re.compile(r'([A-Za-z_][\w-]*)\s*=\s*"([^"]*)"')

_ARTIFACT_CLOSE = "</webArtifact>"
_ACTION_CLOSE = "</webAction>"

ACTION_KINDS = ("file", "shell", "start")


class ParseError(Exception):
    """A static-format failure in the answer manifest (maps to reward 0)."""

    code = "parse_error"


class UnclosedTagError(ParseError):
    code = "UnclosedTag"


class MissingRootError(ParseError):
    code = "MissingRoot"


class MissingAttributeError(ParseError):
    code = "MissingAttribute"


class DuplicateStartError(ParseError):
    code = "DuplicateStart"


@dataclass
class ModelResponse:
    """A raw model output split into its envelope parts.

    ``reasoning`` / ``answer`` are ``None`` when the corresponding block is
    absent or malformed; absence is data for the reward cascade, never an
    error.
    """

    raw: str
    reasoning: str | None = None
    answer: str | None = None


@dataclass
class Action:
    """One manifest action: a file to write, or a shell/start command."""

    kind: str
    content: str
    path: str | None = None


@dataclass
class WebArtifact:
    """The parsed project manifest: root attributes plus ordered actions."""

    id: str
    title: str
    actions: list[Action] = field(default_factory=list)

    def file_actions(self) -> list[Action]:
        return [a for a in self.actions if a.kind == "file"]

    def shell_actions(self) -> list[Action]:
        return [a for a in self.actions if a.kind == "shell"]

    def start_action(self) -> Action | None:
        for action in self.actions:
            if action.kind == "start":
                return action
        return None


def parse_response(raw: str) -> ModelResponse:
    """Split a raw response into reasoning and answer blocks.

    Total over arbitrary byte strings: missing or malformed blocks yield
    ``None`` fields.  The reasoning block is accepted anywhere in the
    response, not only before the answer.  A surrounding ```` ```xml ````
    fence inside the answer is stripped.
    """
    reasoning = None
    for m in _THINK_RE.finditer(raw):
        if m.group(1).strip():
            reasoning = m.group(1)
            break

    answer = None
    answer_matches = _ANSWER_RE.findall(raw)
    if answer_matches:
        if len(answer_matches) > 1:
            logger.warning(
                "response contains %d <answer> blocks; using the first",
                len(answer_matches),
            )
        answer = _strip_code_fence(answer_matches[0])

    return ModelResponse(raw=raw, reasoning=reasoning, answer=answer)


def has_reasoning_format(resp: ModelResponse) -> bool:
    """True iff the response carries a non-blank reasoning block."""
    return resp.reasoning is not None and bool(resp.reasoning.strip())


def parse_artifact(answer: str) -> WebArtifact:
    """Parse an answer body into a :class:`WebArtifact`.

    Actions are returned in document order.  File contents are preserved
    byte-exactly between the action tags, except that the single newline
    after the open tag and the final newline (plus the close tag's own
    indentation) are stripped.

    Raises :class:`ParseError` subclasses on structural failures:
    missing root element, unclosed tags, missing/invalid attributes, or a
    second start action.
    """
    root = _ARTIFACT_OPEN_RE.search(answer)
    if root is None:
        raise MissingRootError("no <webArtifact> element found")
    root_attrs = dict(_ATTR_RE.findall(root.group(1)))
    for attr in ("id", "title"):
        if attr not in root_attrs:
            raise MissingAttributeError(f"<webArtifact> lacks required attribute {attr!r}")

    close_idx = answer.find(_ARTIFACT_CLOSE, root.end())
    if close_idx < 0:
        raise UnclosedTagError("<webArtifact> is never closed")
    body = answer[root.end():close_idx]

    actions = _scan_actions(body)

    if sum(1 for a in actions if a.kind == "start") > 1:
        raise DuplicateStartError("manifest declares more than one start action")

    seen_paths: set[str] = set()
    for action in actions:
        if action.kind == "file":
            if action.path in seen_paths:
                logger.warning("duplicate file action for %s; last occurrence wins", action.path)
            seen_paths.add(action.path)  # type: ignore[arg-type]

    return WebArtifact(id=root_attrs["id"], title=root_attrs["title"], actions=actions)


def serialize_artifact(artifact: WebArtifact) -> str:
    """Render a manifest back to its tag form (inverse of :func:`parse_artifact`)."""
    parts = [f'<webArtifact id="{artifact.id}" title="{artifact.title}">']
    for action in artifact.actions:
        if action.kind == "file":
            parts.append(f'  <webAction type="file" filePath="{action.path}">')
            parts.append(action.content)
            parts.append("  " + _ACTION_CLOSE)
        else:
            parts.append(f'  <webAction type="{action.kind}">{action.content}{_ACTION_CLOSE}')
    parts.append(_ARTIFACT_CLOSE)
    return "\n".join(parts)


def _scan_actions(body: str) -> list[Action]:
    """Scan the artifact body for webAction elements, skipping comments."""
    actions: list[Action] = []
    pos = 0
    while True:
        comment_at = body.find("<!--", pos)
        action_m = _ACTION_OPEN_RE.search(body, pos)
        if comment_at >= 0 and (action_m is None or comment_at < action_m.start()):
            comment_end = body.find("-->", comment_at + 4)
            if comment_end < 0:
                break
            pos = comment_end + 3
            continue
        if action_m is None:
            break

        attrs = dict(_ATTR_RE.findall(action_m.group(1)))
        kind = attrs.get("type")
        if kind is None:
            raise MissingAttributeError("<webAction> lacks required attribute 'type'")
        if kind not in ACTION_KINDS:
            raise MissingAttributeError(f"<webAction> has unsupported type {kind!r}")

        close_at = body.find(_ACTION_CLOSE, action_m.end())
        if close_at < 0:
            raise UnclosedTagError(f"<webAction type={kind!r}> is never closed")
        content = _trim_action_body(body[action_m.end():close_at])
        pos = close_at + len(_ACTION_CLOSE)

        if kind == "file":
            raw_path = attrs.get("filePath")
            if not raw_path:
                raise MissingAttributeError("file action lacks required attribute 'filePath'")
            actions.append(Action(kind="file", content=content, path=_normalize_path(raw_path)))
        else:
            if attrs.get("filePath"):
                logger.warning("ignoring filePath on %s action", kind)
            if not content.strip():
                raise MissingAttributeError(f"{kind} action has an empty command")
            actions.append(Action(kind=kind, content=content))
    return actions


def _trim_action_body(raw: str) -> str:
    """Drop the newline after the open tag and the close tag's leading newline.

    Close tags are conventionally indented on their own line, so the
    trailing trim removes one newline together with any horizontal
    whitespace that follows it.
    """
    if raw.startswith("\n"):
        raw = raw[1:]
    return re.sub(r"\n[ \t]*\Z", "", raw)


def _normalize_path(raw: str) -> str:
    """Normalize a file-action path; reject absolute paths and ``..`` escapes."""
    candidate = raw.replace("\\", "/")
    if candidate.startswith("/"):
        raise MissingAttributeError(f"file path {raw!r} is absolute")
    normalized = posixpath.normpath(candidate)
    if normalized == "." or normalized.startswith("../") or normalized == "..":
        raise MissingAttributeError(f"file path {raw!r} escapes the project root")
    return normalized


def _strip_code_fence(text: str) -> str:
    """Remove a surrounding ``` / ```xml fence from an answer body, if present."""
    stripped = text.strip()
    if not stripped.startswith("```"):
        return text
    lines = stripped.splitlines()
    if lines and lines[0].startswith("```"):
        lines = lines[1:]
    if lines and lines[-1].strip() == "```":
        lines = lines[:-1]
    return "\n".join(lines)
