"""Static scope trees.

A scope tree captures the brace nesting of a source snapshot and nothing
else: no identifiers, no statements.  Two revisions whose code differs only
inside blocks produce structurally equal trees, which is what lets the tree
view collapse runs of structure-preserving edits.

Parsing is a character-level state machine, not a grammar: it only has to
know which braces are real, so comments and string literals are skipped
according to a small language profile.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .errors import DuplicatePath, UnbalancedScope

ROOT = "Root"
FILE = "File"
BLOCK = "Block"

Span = tuple[int, int, int, int]  # startLine, startCol, endLine, endCol; 1-based


@dataclass
class ScopeNode:
    kind: str
    file: str | None = None
    span: Span | None = None
    children: list["ScopeNode"] = field(default_factory=list)


@dataclass(frozen=True)
class LanguageProfile:
    """What to skip while hunting for braces."""

    line_comment: str | None = "//"
    block_comment: tuple[str, str] | None = ("/*", "*/")
    string_delims: frozenset[str] = frozenset({'"', "'"})
    escape: str = "\\"


# C-family syntax: both comment forms, double- and single-quoted strings.
C_LIKE = LanguageProfile()

# The built-in expression language: same comments, double quotes only
# (apostrophes are plain code there).
MINIVIS = LanguageProfile(string_delims=frozenset({'"'}))

PROFILES: dict[str, LanguageProfile] = {"c": C_LIKE, "minivis": MINIVIS}


def parse_scopes(text: str, profile: LanguageProfile = C_LIKE, path: str = "<memory>") -> ScopeNode:
    """Parse one file into a File node whose descendants are its blocks.

    Raises UnbalancedScope with the offending position for an unmatched
    closing brace, or for the innermost brace still open at end of input.
    Unterminated comments and strings are tolerated (the rest of the file is
    treated as comment/string content).
    """
    file_node = ScopeNode(FILE, file=path)
    stack = [file_node]
    open_positions: list[tuple[int, int]] = []

    line, col = 1, 1
    last_pos = (1, 1)
    state = "code"
    string_delim = ""
    i, n = 0, len(text)

    def startswith(token: str | None) -> bool:
        return token is not None and text.startswith(token, i)

    while i < n:
        ch = text[i]
        last_pos = (line, col)
        advance = 1

        if state == "code":
            if startswith(profile.line_comment):
                state = "line_comment"
                advance = len(profile.line_comment or "")
            elif profile.block_comment and startswith(profile.block_comment[0]):
                state = "block_comment"
                advance = len(profile.block_comment[0])
            elif ch in profile.string_delims:
                state = "string"
                string_delim = ch
            elif ch == "{":
                node = ScopeNode(BLOCK, file=stack[0].file)
                stack[-1].children.append(node)
                stack.append(node)
                open_positions.append((line, col))
            elif ch == "}":
                if len(stack) == 1:
                    raise UnbalancedScope("unmatched '}'", line, col)
                node = stack.pop()
                start = open_positions.pop()
                node.span = (start[0], start[1], line, col)
        elif state == "line_comment":
            if ch == "\n":
                state = "code"
        elif state == "block_comment":
            if profile.block_comment and startswith(profile.block_comment[1]):
                state = "code"
                advance = len(profile.block_comment[1])
        elif state == "string":
            if ch == profile.escape:
                advance = 2
            elif ch == string_delim:
                state = "code"

        for j in range(i, min(i + advance, n)):
            if text[j] == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += advance

    if len(stack) > 1:
        pos = open_positions[-1]
        raise UnbalancedScope("unclosed '{'", pos[0], pos[1])

    file_node.span = (1, 1, last_pos[0], last_pos[1])
    return file_node


def merge_trees(file_trees: list[ScopeNode]) -> ScopeNode:
    """Combine per-file trees into one Root, children in path order."""
    if not file_trees:
        raise ValueError("at least one file tree required")
    paths = []
    for tree in file_trees:
        if tree.kind != FILE:
            raise ValueError(f"expected a File node, got {tree.kind}")
        if tree.file in paths:
            raise DuplicatePath(f"duplicate file {tree.file!r}")
        paths.append(tree.file)
    ordered = sorted(file_trees, key=lambda t: t.file or "")
    return ScopeNode(ROOT, children=ordered)


def structurally_equal(a: ScopeNode, b: ScopeNode) -> bool:
    """Equality over kinds, file paths and child shape; spans are ignored."""
    if a.kind != b.kind:
        return False
    if a.kind == FILE and a.file != b.file:
        return False
    if len(a.children) != len(b.children):
        return False
    return all(structurally_equal(x, y) for x, y in zip(a.children, b.children))


def _canonical(node: ScopeNode, out: list[str]) -> None:
    if node.kind == FILE:
        path = node.file or ""
        out.append(f"F{len(path)}:{path}")  # length prefix keeps paths unambiguous
    else:
        out.append(node.kind[0])
    out.append("(")
    for child in node.children:
        _canonical(child, out)
    out.append(")")


def scope_hash(tree: ScopeNode) -> str:
    """8-byte hex digest of the span-free canonical form.

    Two trees hash equal exactly when structurally_equal holds (up to SHA-256
    collisions, which we accept).
    """
    out: list[str] = []
    _canonical(tree, out)
    digest = hashlib.sha256("".join(out).encode("utf-8")).digest()
    return digest[:8].hex()


def to_json(node: ScopeNode) -> dict:
    return {
        "kind": node.kind,
        "file": node.file,
        "span": list(node.span) if node.span else None,
        "children": [to_json(c) for c in node.children],
    }


def from_json(data: dict) -> ScopeNode:
    span = data.get("span")
    return ScopeNode(
        kind=data["kind"],
        file=data.get("file"),
        span=tuple(span) if span else None,
        children=[from_json(c) for c in data.get("children", ())],
    )


def source_tree(files: dict[str, str], profile: LanguageProfile) -> ScopeNode:
    """Parse and merge every file of a snapshot (paths already unique)."""
    return merge_trees([parse_scopes(text, profile, path) for path, text in sorted(files.items())])
