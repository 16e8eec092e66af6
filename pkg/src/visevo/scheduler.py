"""Work scheduling: debounced compiles, prioritized queues, stale dropping.

Rules, in order of authority:
  * a compile is scheduled exactly one quiet period after the last edit;
  * compiles always run before renders;
  * within a class, the newest request runs first;
  * queued compiles older than a successful one are dropped;
  * queued renders of superseded parameter generations are dropped.

The queue itself is clock-free and can be driven single-threaded for
deterministic replays; blocking waits exist for the worker threads.  Every
submitted job is eventually dequeued or counted against an explicit drop
rule, never lost silently.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass, field

from .errors import QueueEmpty
from .params import ParameterSet
from .store import SourceState

COMPILE = "compile"
RENDER = "render"

DEFAULT_DEBOUNCE_MS = 1500.0
DEFAULT_RENDER_WORKERS = 2
DEFAULT_CACHE_SIZE = 64


@dataclass(frozen=True)
class SchedulerConfig:
    debounce_ms: float = DEFAULT_DEBOUNCE_MS
    render_workers: int = DEFAULT_RENDER_WORKERS
    artifact_cache_size: int = DEFAULT_CACHE_SIZE

    @classmethod
    def from_json(cls, data: dict) -> "SchedulerConfig":
        return cls(
            debounce_ms=float(data.get("debounceMs", DEFAULT_DEBOUNCE_MS)),
            render_workers=int(data.get("renderWorkers", DEFAULT_RENDER_WORKERS)),
            artifact_cache_size=int(data.get("artifactCacheSize", DEFAULT_CACHE_SIZE)),
        )


@dataclass(frozen=True)
class Job:
    """One unit of queued work; immutable once enqueued."""

    kind: str
    seq: int
    session_id: str
    source: SourceState | None = None       # compile payload
    revision_id: str | None = None          # render payload
    params: ParameterSet | None = None
    param_gen: int = 0


@dataclass
class QueueStats:
    submitted: int = 0
    dequeued: int = 0
    dropped_stale_compiles: int = 0
    dropped_superseded_renders: int = 0


class Debouncer:
    """Tracks the newest pending source per session against a quiet period.

    Clock-agnostic: callers pass ``now`` in seconds.  A newer edit replaces
    the pending source and restarts the wait, so the compile fires exactly
    ``debounce_ms`` after the final edit of a burst.
    """

    def __init__(self, debounce_ms: float = DEFAULT_DEBOUNCE_MS):
        self.delay = debounce_ms / 1000.0
        self._pending: dict[str, tuple[float, SourceState]] = {}

    def on_edit(self, session_id: str, source: SourceState, now: float) -> float:
        deadline = now + self.delay
        self._pending[session_id] = (deadline, source)
        return deadline

    def due(self, now: float) -> list[tuple[str, SourceState]]:
        """Pop every (session, source) whose quiet period has elapsed."""
        ready = [(sid, src) for sid, (deadline, src) in self._pending.items()
                 if deadline <= now]
        for sid, _ in ready:
            del self._pending[sid]
        return ready

    def next_deadline(self) -> float | None:
        if not self._pending:
            return None
        return min(deadline for deadline, _ in self._pending.values())

    def pending_count(self) -> int:
        return len(self._pending)


class JobQueue:
    """Two-class priority queue: all compiles before any render, newest-first
    within each class.  Safe for concurrent submit/wait; ``next`` gives the
    same ordering single-threaded for simulated replays."""

    def __init__(self):
        self._lock = threading.Condition()
        self._compiles: list[Job] = []
        self._renders: list[Job] = []
        self._next_seq = 1
        self._closed = False
        self.stats = QueueStats()

    # -- submission --

    def submit_compile(self, session_id: str, source: SourceState) -> Job:
        with self._lock:
            job = Job(COMPILE, self._next_seq, session_id, source=source)
            self._next_seq += 1
            self._compiles.append(job)
            self.stats.submitted += 1
            self._lock.notify_all()
            return job

    def submit_render(self, session_id: str, revision_id: str,
                      params: ParameterSet, param_gen: int) -> Job:
        with self._lock:
            job = Job(RENDER, self._next_seq, session_id,
                      revision_id=revision_id, params=params, param_gen=param_gen)
            self._next_seq += 1
            self._renders.append(job)
            self.stats.submitted += 1
            self._lock.notify_all()
            return job

    def schedule_branch_refresh(self, session_id: str, branch: list[str],
                                params: ParameterSet, param_gen: int) -> list[Job]:
        """One render per branch revision, enqueued root→head.

        Newest-first dequeue then serves the head before its ancestors.
        Renders of the same session with an older generation are superseded
        and dropped here.
        """
        with self._lock:
            kept = []
            for job in self._renders:
                if job.session_id == session_id and job.param_gen < param_gen:
                    self.stats.dropped_superseded_renders += 1
                else:
                    kept.append(job)
            self._renders = kept
            jobs = []
            for revision_id in branch:
                job = Job(RENDER, self._next_seq, session_id,
                          revision_id=revision_id, params=params, param_gen=param_gen)
                self._next_seq += 1
                self._renders.append(job)
                self.stats.submitted += 1
                jobs.append(job)
            if jobs:
                self._lock.notify_all()
            return jobs

    # -- dequeueing --

    def _pop_newest(self, jobs: list[Job]) -> Job:
        best = max(range(len(jobs)), key=lambda i: jobs[i].seq)
        job = jobs.pop(best)
        self.stats.dequeued += 1
        self._lock.notify_all()  # draining compiles can unblock render waiters
        return job

    def next(self) -> Job:
        """Highest-priority job right now; for single-threaded draining."""
        with self._lock:
            if self._compiles:
                return self._pop_newest(self._compiles)
            if self._renders:
                return self._pop_newest(self._renders)
            raise QueueEmpty("no queued jobs")

    def wait_compile(self, timeout: float | None = None) -> Job | None:
        """Block until a compile is available (or closed/timeout)."""
        with self._lock:
            if not self._lock.wait_for(
                    lambda: self._compiles or self._closed, timeout):
                return None
            if self._compiles:
                return self._pop_newest(self._compiles)
            return None

    def wait_render(self, timeout: float | None = None) -> Job | None:
        """Block until a render may run: none queued compiles, one available."""
        with self._lock:
            if not self._lock.wait_for(
                    lambda: (self._renders and not self._compiles) or self._closed,
                    timeout):
                return None
            if self._renders and not self._compiles:
                return self._pop_newest(self._renders)
            return None

    # -- dropping rules --

    def mark_compile_succeeded(self, seq: int) -> int:
        """Drop queued compiles older than the revision that just built."""
        with self._lock:
            before = len(self._compiles)
            self._compiles = [j for j in self._compiles if j.seq >= seq]
            dropped = before - len(self._compiles)
            self.stats.dropped_stale_compiles += dropped
            if dropped:
                self._lock.notify_all()  # renders may be unblocked now
            return dropped

    def purge_superseded_renders(self, session_id: str, param_gen: int) -> int:
        with self._lock:
            before = len(self._renders)
            self._renders = [j for j in self._renders
                             if j.session_id != session_id or j.param_gen >= param_gen]
            dropped = before - len(self._renders)
            self.stats.dropped_superseded_renders += dropped
            return dropped

    # -- introspection / lifecycle --

    def pending(self) -> tuple[tuple[str, int], ...]:
        with self._lock:
            jobs = self._compiles + self._renders
            return tuple((j.kind, j.seq) for j in sorted(jobs, key=lambda j: j.seq))

    def compile_queued(self) -> bool:
        with self._lock:
            return bool(self._compiles)

    def __len__(self) -> int:
        with self._lock:
            return len(self._compiles) + len(self._renders)

    def close(self) -> None:
        with self._lock:
            self._closed = True
            self._lock.notify_all()

    @property
    def closed(self) -> bool:
        with self._lock:
            return self._closed


class ArtifactCache:
    """LRU map revision id → compiled artifact; evicted entries recompile on
    demand."""

    def __init__(self, capacity: int = DEFAULT_CACHE_SIZE):
        if capacity < 1:
            raise ValueError("cache capacity must be at least 1")
        self.capacity = capacity
        self._lock = threading.Lock()
        self._entries: OrderedDict[str, object] = OrderedDict()

    def get(self, revision_id: str) -> object | None:
        with self._lock:
            artifact = self._entries.get(revision_id)
            if artifact is not None:
                self._entries.move_to_end(revision_id)
            return artifact

    def put(self, revision_id: str, artifact: object) -> None:
        with self._lock:
            self._entries[revision_id] = artifact
            self._entries.move_to_end(revision_id)
            while len(self._entries) > self.capacity:
                self._entries.popitem(last=False)

    def __contains__(self, revision_id: str) -> bool:
        with self._lock:
            return revision_id in self._entries

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)
