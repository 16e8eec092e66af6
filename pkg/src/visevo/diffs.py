"""Line diffs between source snapshots.

The edit script is Myers' O(ND) shortest-script algorithm, so the number of
removed plus added lines is provably minimal.  Scripts are grouped into hunks
with three lines of context, and a diff carries both trailing-newline flags
so applying it reproduces the target text byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DiffMismatch

KEEP = "keep"
REMOVE = "remove"
ADD = "add"

MODIFIED = "modified"
ADDED = "added"
DELETED = "deleted"
UNCHANGED = "unchanged"

CONTEXT = 3

Op = tuple[str, str]


@dataclass(frozen=True)
class Hunk:
    """A contiguous run of ops; starts are 1-based, or one less when the
    corresponding side contributes no lines (unified-diff convention)."""

    from_start: int
    from_len: int
    to_start: int
    to_len: int
    ops: tuple[Op, ...]


@dataclass(frozen=True)
class FileDiff:
    path: str
    status: str
    hunks: tuple[Hunk, ...]
    from_trailing_newline: bool
    to_trailing_newline: bool


def split_lines(text: str) -> tuple[list[str], bool]:
    """Split into lines without terminators plus a had-final-newline flag."""
    if not text:
        return [], False
    trailing = text.endswith("\n")
    body = text[:-1] if trailing else text
    return body.split("\n"), trailing


def _join_lines(lines: list[str], trailing: bool) -> str:
    if not lines:
        return ""
    return "\n".join(lines) + ("\n" if trailing else "")


def _myers_ops(a: list[int], b: list[int]) -> list[tuple[str, int]]:
    """Minimal edit script over interned lines, as (op, index) moves.

    The index refers into ``a`` for keep/remove and into ``b`` for add.
    """
    n, m = len(a), len(b)
    if n == 0:
        return [(ADD, y) for y in range(m)]
    if m == 0:
        return [(REMOVE, x) for x in range(n)]

    v = {1: 0}
    trace: list[dict[int, int]] = []
    depth = -1
    for d in range(n + m + 1):
        trace.append(dict(v))
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and v.get(k - 1, -1) < v.get(k + 1, -1)):
                x = v.get(k + 1, 0)
            else:
                x = v.get(k - 1, 0) + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            v[k] = x
            if x >= n and y >= m:
                depth = d
                break
        if depth >= 0:
            break

    ops: list[tuple[str, int]] = []
    x, y = n, m
    for d in range(depth, 0, -1):
        prev = trace[d]
        k = x - y
        if k == -d or (k != d and prev.get(k - 1, -1) < prev.get(k + 1, -1)):
            pk = k + 1
        else:
            pk = k - 1
        px = prev[pk]
        py = px - pk
        while x > px and y > py:  # rewind the snake
            x -= 1
            y -= 1
            ops.append((KEEP, x))
        if pk == k + 1:
            y -= 1
            ops.append((ADD, y))
        else:
            x -= 1
            ops.append((REMOVE, x))
    while x > 0 and y > 0:
        x -= 1
        y -= 1
        ops.append((KEEP, x))
    ops.reverse()
    return ops


def _script(a_lines: list[str], b_lines: list[str]) -> list[Op]:
    """Full keep/remove/add script from a to b with minimal changes."""
    # Common affixes never change; trimming them keeps Myers' D small.
    pre = 0
    while pre < len(a_lines) and pre < len(b_lines) and a_lines[pre] == b_lines[pre]:
        pre += 1
    suf = 0
    while (suf < len(a_lines) - pre and suf < len(b_lines) - pre
           and a_lines[-1 - suf] == b_lines[-1 - suf]):
        suf += 1

    mid_a = a_lines[pre:len(a_lines) - suf]
    mid_b = b_lines[pre:len(b_lines) - suf]
    interned: dict[str, int] = {}
    ia = [interned.setdefault(s, len(interned)) for s in mid_a]
    ib = [interned.setdefault(s, len(interned)) for s in mid_b]

    ops: list[Op] = [(KEEP, line) for line in a_lines[:pre]]
    for tag, idx in _myers_ops(ia, ib):
        ops.append((tag, mid_b[idx] if tag == ADD else mid_a[idx]))
    if suf:
        ops.extend((KEEP, line) for line in a_lines[len(a_lines) - suf:])
    return ops


def _hunks(ops: list[Op]) -> tuple[Hunk, ...]:
    changed = [i for i, (tag, _) in enumerate(ops) if tag != KEEP]
    if not changed:
        return ()
    # Expand each change by the context window, then merge touching ranges.
    ranges: list[list[int]] = []
    for i in changed:
        lo, hi = max(0, i - CONTEXT), min(len(ops), i + CONTEXT + 1)
        if ranges and lo <= ranges[-1][1]:
            ranges[-1][1] = max(ranges[-1][1], hi)
        else:
            ranges.append([lo, hi])

    hunks = []
    a_pos = b_pos = 0  # lines consumed before the current op index
    cursor = 0
    for lo, hi in ranges:
        for tag, _ in ops[cursor:lo]:
            a_pos += tag != ADD
            b_pos += tag != REMOVE
        chunk = tuple(ops[lo:hi])
        from_len = sum(1 for tag, _ in chunk if tag != ADD)
        to_len = sum(1 for tag, _ in chunk if tag != REMOVE)
        hunks.append(Hunk(
            from_start=a_pos + 1 if from_len else a_pos,
            from_len=from_len,
            to_start=b_pos + 1 if to_len else b_pos,
            to_len=to_len,
            ops=chunk,
        ))
        a_pos += from_len
        b_pos += to_len
        cursor = hi
    return tuple(hunks)


def line_diff(a: str, b: str, path: str = "") -> FileDiff:
    a_lines, a_trail = split_lines(a)
    b_lines, b_trail = split_lines(b)
    if a == b:
        return FileDiff(path, UNCHANGED, (), a_trail, b_trail)
    return FileDiff(path, MODIFIED, _hunks(_script(a_lines, b_lines)), a_trail, b_trail)


def apply_diff(a: str, diff: FileDiff) -> str:
    """Replay ``diff`` onto ``a``; every kept or removed line must match.

    Returns the target text byte for byte, trailing newline included.
    """
    lines, trailing = split_lines(a)
    if trailing != diff.from_trailing_newline:
        raise DiffMismatch("trailing newline differs from the diff's source")
    out: list[str] = []
    cursor = 0
    for hunk in diff.hunks:
        start = hunk.from_start - 1 if hunk.from_len else hunk.from_start
        if start < cursor or start > len(lines):
            raise DiffMismatch(f"hunk start {hunk.from_start} out of order")
        out.extend(lines[cursor:start])
        cursor = start
        for tag, content in hunk.ops:
            if tag == ADD:
                out.append(content)
                continue
            if cursor >= len(lines) or lines[cursor] != content:
                raise DiffMismatch(f"context mismatch at source line {cursor + 1}")
            if tag == KEEP:
                out.append(content)
            cursor += 1
    out.extend(lines[cursor:])
    return _join_lines(out, diff.to_trailing_newline)


def _whole_file(content: str, path: str, tag: str) -> FileDiff:
    lines, trailing = split_lines(content)
    ops = tuple((tag, line) for line in lines)
    if tag == ADD:
        hunk = Hunk(0, 0, 1 if lines else 0, len(lines), ops)
        status, from_trail, to_trail = ADDED, False, trailing
    else:
        hunk = Hunk(1 if lines else 0, len(lines), 0, 0, ops)
        status, from_trail, to_trail = DELETED, trailing, False
    return FileDiff(path, status, (hunk,) if lines else (), from_trail, to_trail)


def revision_diff(from_files: dict[str, str], to_files: dict[str, str]) -> tuple[FileDiff, ...]:
    """Per-file diffs over the union of paths, in path order."""
    diffs = []
    for path in sorted(set(from_files) | set(to_files)):
        if path not in from_files:
            diffs.append(_whole_file(to_files[path], path, ADD))
        elif path not in to_files:
            diffs.append(_whole_file(from_files[path], path, REMOVE))
        else:
            diffs.append(line_diff(from_files[path], to_files[path], path))
    return tuple(diffs)


_MARK = {KEEP: " ", REMOVE: "-", ADD: "+"}


def unified_text(diffs: tuple[FileDiff, ...] | list[FileDiff]) -> str:
    """Conventional unified-diff rendering, for logs and the CLI."""
    out: list[str] = []
    for d in diffs:
        if d.status == UNCHANGED:
            continue
        out.append(f"--- {d.path}")
        out.append(f"+++ {d.path}")
        for h in d.hunks:
            out.append(f"@@ -{h.from_start},{h.from_len} +{h.to_start},{h.to_len} @@")
            out.extend(_MARK[tag] + content for tag, content in h.ops)
    return "\n".join(out) + ("\n" if out else "")


def diff_to_json(d: FileDiff) -> dict:
    return {
        "path": d.path,
        "status": d.status,
        "fromTrailingNewline": d.from_trailing_newline,
        "toTrailingNewline": d.to_trailing_newline,
        "hunks": [
            {
                "fromStart": h.from_start,
                "fromLen": h.from_len,
                "toStart": h.to_start,
                "toLen": h.to_len,
                "ops": [[tag, content] for tag, content in h.ops],
            }
            for h in d.hunks
        ],
    }
