"""Content-addressed revision store.

Every successful compile of a source snapshot becomes an immutable node in an
evolution tree.  A revision's identity is the SHA-256 of its parent id and the
canonical encoding of its files, so equal (parent, source) pairs always map to
the same id, on any machine, in any process.

The store is purely additive: revisions are never rewritten or deleted.  It
can live entirely in memory or be bound to a directory, in which case every
commit is written through as a content blob per file plus one line in an
append-only log.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping

from .errors import CorruptStore, InvalidPath, UnknownParent, UnknownRevision

# Roots hash against a well-known all-zero parent so the canonical encoding
# has a fixed width whether or not a parent exists.
NULL_PARENT = "0" * 64

_OBJECTS_DIR = "objects"
_LOG_NAME = "revisions.log"


def _check_path(path: str) -> None:
    if not path:
        raise InvalidPath("empty file path")
    if path.startswith("/"):
        raise InvalidPath(f"absolute file path not allowed: {path!r}")
    if ".." in path.split("/"):
        raise InvalidPath(f"parent-directory segment not allowed: {path!r}")


@dataclass(frozen=True, eq=True)
class SourceState:
    """A snapshot of every source file in a session.

    ``files`` maps relative paths to text content and is normalized to
    lexicographic path order at construction.  ``toolchain_id`` tags which
    toolchain the snapshot targets; it takes no part in equality or hashing
    and is not persisted per revision (the owning session re-injects it).
    """

    files: Mapping[str, str]
    toolchain_id: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.files:
            raise InvalidPath("a source state needs at least one file")
        for path, content in self.files.items():
            _check_path(path)
            if not isinstance(content, str):
                raise InvalidPath(f"content of {path!r} is not text")
        object.__setattr__(self, "files", dict(sorted(self.files.items())))

    def canonical_bytes(self, parent: str | None) -> bytes:
        """Length-prefixed binary encoding the revision id is hashed over."""
        out = bytearray((parent or NULL_PARENT).encode("ascii"))
        for path, content in self.files.items():  # already sorted
            p = path.encode("utf-8")
            c = content.encode("utf-8")
            out += len(p).to_bytes(8, "big") + p
            out += len(c).to_bytes(8, "big") + c
        return bytes(out)


def revision_id(parent: str | None, source: SourceState) -> str:
    return hashlib.sha256(source.canonical_bytes(parent)).hexdigest()


@dataclass(frozen=True)
class Revision:
    """One immutable node of the evolution tree."""

    id: str
    parent: str | None
    source: SourceState
    seq: int
    created_at: float
    sst_hash: str


def _blob_id(content: str) -> str:
    return hashlib.sha256(content.encode("utf-8")).hexdigest()


class RevisionStore:
    """Append-only tree of revisions, safe to use from multiple threads.

    A single writer commits; any thread may read.  All returned objects are
    immutable snapshots.  Pass ``directory`` (or use :meth:`open`) to bind the
    store to disk: blobs land under ``objects/<aa>/<rest>`` keyed by content
    hash and metadata is appended to ``revisions.log`` as one JSON line per
    revision.
    """

    def __init__(self, directory: str | Path | None = None):
        self._lock = threading.RLock()
        self._revisions: dict[str, Revision] = {}
        self._children: dict[str, list[str]] = {}
        self._roots: list[str] = []
        self._next_seq = 0
        self._dir: Path | None = None
        if directory is not None:
            self._bind(Path(directory))

    # -- construction --

    @classmethod
    def open(cls, directory: str | Path) -> "RevisionStore":
        """Bind to ``directory``, loading any revisions already on disk."""
        directory = Path(directory)
        if (directory / _LOG_NAME).exists():
            return cls.load(directory)
        return cls(directory)

    @classmethod
    def load(cls, directory: str | Path) -> "RevisionStore":
        """Rebuild a store from disk, verifying every content hash.

        Raises CorruptStore if any blob fails its hash check or a log line
        does not reproduce its recorded revision id.
        """
        directory = Path(directory)
        log = directory / _LOG_NAME
        if not log.exists():
            raise CorruptStore(f"no revision log under {directory}")
        store = cls()
        for lineno, line in enumerate(log.read_text("utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptStore(f"unreadable log line {lineno}: {exc}") from exc
            files = {}
            for entry in rec["files"]:
                blob = str(entry["blob"])
                blob_path = directory / _OBJECTS_DIR / blob[:2] / blob[2:]
                try:
                    content = blob_path.read_text("utf-8")
                except OSError as exc:
                    raise CorruptStore(f"missing blob {blob}") from exc
                if _blob_id(content) != blob:
                    raise CorruptStore(f"hash mismatch on blob {blob}")
                files[str(entry["path"])] = content
            source = SourceState(files)
            parent = rec["parent"]
            if revision_id(parent, source) != rec["id"]:
                raise CorruptStore(f"hash mismatch on revision {rec['id']}")
            rev = Revision(
                id=rec["id"],
                parent=parent,
                source=source,
                seq=int(rec["seq"]),
                created_at=float(rec["createdAt"]),
                sst_hash=str(rec["sstHash"]),
            )
            store._insert(rev)
        store._dir = directory
        return store

    def _bind(self, directory: Path) -> None:
        (directory / _OBJECTS_DIR).mkdir(parents=True, exist_ok=True)
        (directory / _LOG_NAME).touch()
        self._dir = directory

    def persist(self, directory: str | Path) -> Path:
        """Write the full store to ``directory`` and return it.

        Loading the written directory reproduces ids, parents, sequence
        numbers and timestamps exactly.
        """
        directory = Path(directory)
        (directory / _OBJECTS_DIR).mkdir(parents=True, exist_ok=True)
        with self._lock:
            revs = sorted(self._revisions.values(), key=lambda r: r.seq)
            lines = [self._write_objects(directory, r) for r in revs]
        (directory / _LOG_NAME).write_text("".join(lines), "utf-8")
        return directory

    def _write_objects(self, directory: Path, rev: Revision) -> str:
        entries = []
        for path, content in rev.source.files.items():
            blob = _blob_id(content)
            blob_path = directory / _OBJECTS_DIR / blob[:2] / blob[2:]
            if not blob_path.exists():
                blob_path.parent.mkdir(parents=True, exist_ok=True)
                blob_path.write_text(content, "utf-8")
            entries.append({"path": path, "blob": blob})
        record = {
            "id": rev.id,
            "parent": rev.parent,
            "seq": rev.seq,
            "createdAt": rev.created_at,
            "sstHash": rev.sst_hash,
            "files": entries,
        }
        return json.dumps(record, separators=(",", ":")) + "\n"

    # -- commits --

    def commit(self, parent: str | None, source: SourceState, sst_hash: str = "") -> str:
        """Append a revision and return its id.

        Committing the parent's own source again is a no-op returning the
        parent id, and committing any (parent, source) pair already present
        returns the existing id without touching the tree.
        """
        with self._lock:
            if parent is not None:
                parent_rev = self._revisions.get(parent)
                if parent_rev is None:
                    raise UnknownParent(f"no revision {parent}")
                if parent_rev.source == source:
                    return parent
            rid = revision_id(parent, source)
            if rid in self._revisions:
                return rid
            rev = Revision(
                id=rid,
                parent=parent,
                source=SourceState(dict(source.files), source.toolchain_id),
                seq=self._next_seq,
                created_at=time.time(),
                sst_hash=sst_hash,
            )
            self._insert(rev)
            if self._dir is not None:
                line = self._write_objects(self._dir, rev)
                with (self._dir / _LOG_NAME).open("a", encoding="utf-8") as fh:
                    fh.write(line)
            return rid

    def _insert(self, rev: Revision) -> None:
        self._revisions[rev.id] = rev
        if rev.parent is None:
            self._roots.append(rev.id)
        else:
            self._children.setdefault(rev.parent, []).append(rev.id)
        self._next_seq = max(self._next_seq, rev.seq + 1)

    # -- reads --

    def get(self, rid: str) -> Revision:
        with self._lock:
            rev = self._revisions.get(rid)
        if rev is None:
            raise UnknownRevision(f"no revision {rid}")
        return rev

    def checkout(self, rid: str) -> SourceState:
        return self.get(rid).source

    def parent(self, rid: str) -> str | None:
        return self.get(rid).parent

    def children(self, rid: str) -> list[str]:
        self.get(rid)
        with self._lock:
            kids = list(self._children.get(rid, ()))
        kids.sort(key=lambda k: self._revisions[k].seq)
        return kids

    def branch_path(self, head: str) -> list[str]:
        """Revision ids from the root down to ``head`` inclusive."""
        path = []
        cursor: str | None = head
        while cursor is not None:
            rev = self.get(cursor)
            path.append(rev.id)
            cursor = rev.parent
        path.reverse()
        return path

    def roots(self) -> list[str]:
        with self._lock:
            return list(self._roots)

    def latest(self) -> str | None:
        """Id of the most recently committed revision, if any."""
        with self._lock:
            if not self._revisions:
                return None
            return max(self._revisions.values(), key=lambda r: r.seq).id

    def revisions(self) -> Iterator[Revision]:
        with self._lock:
            revs = sorted(self._revisions.values(), key=lambda r: r.seq)
        return iter(revs)

    def __contains__(self, rid: str) -> bool:
        with self._lock:
            return rid in self._revisions

    def __len__(self) -> int:
        with self._lock:
            return len(self._revisions)
