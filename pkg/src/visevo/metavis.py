"""Compressed revision-tree views.

Adjacent revisions whose scope trees are structurally identical collapse
into one displayed group; the branch display lays the current lineage out
root→head with result images, one scope tree per bundle, and a variance
thumbnail wherever a bundle shows several images side by side.

Everything here is a pure derivation from revision metadata; callers pass
any objects carrying ``id``/``parent``/``seq``/``sst_hash``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnknownImage, UnknownRevision
from .store import NULL_PARENT

BLUE = "blue"       # on current branch
GREY = "grey"       # other branches
ORANGE = "orange"   # current revision
GREEN = "green"     # collapsed group


@dataclass(frozen=True)
class GroupNode:
    """One displayed node: a maximal connected run of equal-hash revisions.

    ``group_id`` is the id of the earliest member, which is also where the
    parent edge enters the run.
    """

    group_id: str
    members: tuple[str, ...]        # seq order
    sst_hash: str
    children: tuple[str, ...]       # child group ids, by child seq
    collapsed: bool

    def to_json(self) -> dict:
        return {
            "id": self.group_id,
            "members": list(self.members),
            "sstHash": self.sst_hash,
            "children": list(self.children),
            "collapsed": self.collapsed,
        }


def result_ref(revision_id: str, param_gen: int) -> str:
    return f"{revision_id}:{param_gen}"


def variance_ref(group_id: str, param_gen: int) -> str:
    return f"g{group_id}:{param_gen}"


def parse_image_ref(ref: str) -> tuple[str, str, int]:
    """Split an opaque image ref into (kind, id, paramGen).

    Kind is "result" for revision images and "variance" for group variance
    images.  Malformed refs raise UnknownImage.
    """
    kind = "result"
    body = ref
    if ref.startswith("g"):
        kind, body = "variance", ref[1:]
    ident, sep, gen = body.rpartition(":")
    if not sep or not ident or not gen.lstrip("-").isdigit():
        raise UnknownImage(f"malformed image ref {ref!r}")
    return kind, ident, int(gen)


def _parent_of(rev, ids: set[str]) -> str | None:
    parent = rev.parent
    if parent is None or parent == NULL_PARENT or parent not in ids:
        return None
    return parent


def compress_tree(revisions, expanded=frozenset()) -> list[GroupNode]:
    """Group revisions by walking tree edges between equal scope hashes.

    Each group is a connected component of the subgraph keeping exactly the
    edges whose endpoints hash alike; the component's earliest member names
    the group.  Groups come back ordered by that root's seq.
    """
    revs = sorted(revisions, key=lambda r: r.seq)
    ids = {r.id for r in revs}
    by_id = {r.id: r for r in revs}
    group_of: dict[str, str] = {}
    members: dict[str, list[str]] = {}

    for rev in revs:  # parents commit before children, so one pass suffices
        parent = _parent_of(rev, ids)
        if parent is not None and by_id[parent].sst_hash == rev.sst_hash:
            gid = group_of[parent]
        else:
            gid = rev.id
            members[gid] = []
        group_of[rev.id] = gid
        members[gid].append(rev.id)

    children: dict[str, list[str]] = {gid: [] for gid in members}
    for rev in revs:
        parent = _parent_of(rev, ids)
        if parent is not None and group_of[parent] != group_of[rev.id]:
            children[group_of[parent]].append(group_of[rev.id])

    groups = []
    for gid in sorted(members, key=lambda g: by_id[g].seq):
        kids = tuple(sorted(children[gid], key=lambda g: by_id[g].seq))
        collapsed = len(members[gid]) > 1 and gid not in expanded
        groups.append(GroupNode(
            group_id=gid,
            members=tuple(members[gid]),
            sst_hash=by_id[gid].sst_hash,
            children=kids,
            collapsed=collapsed,
        ))
    return groups


def group_index(groups: list[GroupNode]) -> dict[str, GroupNode]:
    """Map every member revision id to its group."""
    out = {}
    for group in groups:
        for member in group.members:
            out[member] = group
    return out


def branch_path_ids(revisions, head: str) -> list[str]:
    by_id = {r.id: r for r in revisions}
    if head not in by_id:
        raise UnknownRevision(f"unknown revision {head!r}")
    path = []
    cursor: str | None = head
    while cursor is not None:
        path.append(cursor)
        cursor = _parent_of(by_id[cursor], set(by_id))
    path.reverse()
    return path


def branch_view(revisions, head: str | None, *, current: str | None = None,
                expanded=frozenset(), param_gen: int = 0) -> dict:
    """Rows for the branch display, root→head.

    Collapsed bundles contribute one row with their on-branch members'
    image refs side by side, the shared scope hash once, and a variance
    ref when at least two of those images exist.  Expanded bundles (and
    singletons) contribute one row per on-branch revision.
    """
    revisions = list(revisions)
    if head is None:
        return {"head": None, "rows": [], "current": None,
                "colors": {}, "collapsedGroups": []}
    groups = compress_tree(revisions, expanded=expanded)
    of = group_index(groups)
    path = branch_path_ids(revisions, head)
    on_branch = set(path)
    current = current if current is not None else head

    rows = []
    seen: set[str] = set()
    for rid in path:
        group = of[rid]
        if group.group_id in seen:
            continue
        seen.add(group.group_id)
        branch_members = [m for m in group.members if m in on_branch]
        if group.collapsed:
            refs = [result_ref(m, param_gen) for m in branch_members]
            rows.append({
                "kind": "group",
                "id": group.group_id,
                "members": branch_members,
                "imageRefs": refs,
                "sstHash": group.sst_hash,
                "varianceRef": (variance_ref(group.group_id, param_gen)
                                if len(branch_members) >= 2 else None),
                "collapsed": True,
            })
        else:
            for member in branch_members:
                rows.append({
                    "kind": "revision",
                    "id": member,
                    "groupId": group.group_id,
                    "imageRef": result_ref(member, param_gen),
                    "sstHash": group.sst_hash,
                })

    colors = {r.id: (BLUE if r.id in on_branch else GREY) for r in revisions}
    collapsed_groups = [g.group_id for g in groups if g.collapsed]
    return {
        "head": head,
        "rows": rows,
        "current": current,
        "colors": colors,
        "collapsedGroups": collapsed_groups,
    }


def tree_payload(revisions, head: str | None, *, current: str | None = None,
                 expanded=frozenset(), param_gen: int = 0) -> dict:
    """Full view payload: every group plus the branch rows for ``head``."""
    revisions = list(revisions)
    groups = compress_tree(revisions, expanded=expanded)
    return {
        "groups": [g.to_json() for g in groups],
        "branch": branch_view(revisions, head, current=current,
                              expanded=expanded, param_gen=param_gen),
    }
