"""One live-coding session: edits become debounced compiles, successful
compiles become revisions, revisions get rendered, and views are derived.

The engine runs in two modes.  Threaded mode (the server) owns a debounce
timer thread, one compile worker, and a small render pool.  Manual mode
(tests, scripted sessions) advances a simulated clock with ``pump`` and
executes queued jobs with ``step``/``drain`` — same code paths, one thread,
deterministic order.

Notification fan-out is synchronous: subscribers must return quickly and
must not call back into the engine.
"""

from __future__ import annotations

import logging
import threading
import time
import uuid
from collections.abc import Mapping

from .diffs import FileDiff, revision_diff
from .errors import UnknownGroup, UnknownImage
from .images import Image, encode_png, variance_image
from .metavis import (
    compress_tree,
    parse_image_ref,
    result_ref,
    tree_payload,
)
from .params import (
    ParameterSet,
    check_declared_types,
    effective_params,
    extract_params,
)
from .scheduler import (
    ArtifactCache,
    Debouncer,
    Job,
    JobQueue,
    SchedulerConfig,
    COMPILE,
)
from .scopes import scope_hash, source_tree
from .store import RevisionStore, SourceState
from .toolchain.base import ToolchainAdapter

log = logging.getLogger(__name__)

DEFAULT_RESOLUTION = (256, 256)


class SessionEngine:
    """State and workers for a single editing session."""

    def __init__(self, adapter: ToolchainAdapter, *,
                 config: SchedulerConfig | None = None,
                 store: RevisionStore | None = None,
                 width: int = DEFAULT_RESOLUTION[0],
                 height: int = DEFAULT_RESOLUTION[1],
                 session_id: str | None = None,
                 threaded: bool = False):
        self.session_id = session_id or uuid.uuid4().hex
        self.adapter = adapter
        self.config = config or SchedulerConfig()
        self.width = width
        self.height = height
        self.store = store if store is not None else RevisionStore()

        self._lock = threading.RLock()
        self.queue = JobQueue()
        self.debouncer = Debouncer(self.config.debounce_ms)
        self.cache = ArtifactCache(self.config.artifact_cache_size)
        self._params = ParameterSet(values={}, generation=0)
        self._current: str | None = self.store.latest()
        self._expanded: set[str] = set()
        self._images: dict[tuple[str, int], Image] = {}
        self._subscribers: list = []
        self._closed = False
        self.skipped_renders = 0

        self._threaded = threaded
        self._edit_cond = threading.Condition()
        self._threads: list[threading.Thread] = []
        if threaded:
            self._start_workers()
        if self._current is not None:
            # reopened store: repopulate images for the visible branch
            self._refresh_branch(self._current)

    # -- notifications ----------------------------------------------------

    def subscribe(self, callback) -> None:
        """callback(method: str, params: dict); called from worker threads."""
        with self._lock:
            self._subscribers.append(callback)

    def unsubscribe(self, callback) -> None:
        with self._lock:
            if callback in self._subscribers:
                self._subscribers.remove(callback)

    def _notify(self, method: str, params: dict) -> None:
        with self._lock:
            subs = list(self._subscribers)
        for callback in subs:
            try:
                callback(method, params)
            except Exception:
                log.exception("notification subscriber failed")

    # -- editing ----------------------------------------------------------

    @property
    def current(self) -> str | None:
        with self._lock:
            return self._current

    @property
    def generation(self) -> int:
        with self._lock:
            return self._params.generation

    @property
    def active_params(self) -> ParameterSet:
        with self._lock:
            return self._params

    def update_source(self, files: Mapping[str, str],
                      now: float | None = None) -> None:
        """Record an edit; a compile fires once the quiet period elapses."""
        source = SourceState(files=dict(files),
                             toolchain_id=self.adapter.id)
        at = time.monotonic() if now is None else now
        with self._edit_cond:
            self.debouncer.on_edit(self.session_id, source, at)
            self._edit_cond.notify_all()

    def pump(self, now: float) -> list[Job]:
        """Manual clock: enqueue compiles whose quiet period has passed."""
        with self._edit_cond:
            due = self.debouncer.due(now)
        return [self.queue.submit_compile(sid, src) for sid, src in due]

    def step(self) -> Job:
        """Manual mode: execute exactly one queued job (QueueEmpty if none)."""
        job = self.queue.next()
        self._execute(job)
        return job

    def drain(self) -> list[Job]:
        """Manual mode: run queued jobs (including ones they enqueue)."""
        done = []
        while len(self.queue):
            done.append(self.step())
        return done

    # -- job execution ----------------------------------------------------

    def _execute(self, job: Job) -> None:
        if job.kind == COMPILE:
            self._execute_compile(job)
        else:
            self._execute_render(job)

    def _execute_compile(self, job: Job) -> None:
        result = self.adapter.compile(job.source)
        if not result.ok:
            self._notify("compile.failed", {
                "sessionId": self.session_id,
                "diagnostics": [d.to_json() for d in result.diagnostics],
            })
            return

        tree = source_tree(job.source.files, self.adapter.scope_profile)
        with self._lock:
            previous = self._current
            rid = self.store.commit(previous, job.source, scope_hash(tree))
            moved = rid != previous
            self._current = rid
            self.queue.mark_compile_succeeded(job.seq)
            self.cache.put(rid, result.artifact)
            params = self._params

        self._notify("compile.succeeded", {
            "sessionId": self.session_id,
            "revisionId": rid,
        })
        if moved:
            self._notify("tree.changed", {"sessionId": self.session_id})
        self.queue.submit_render(self.session_id, rid, params,
                                 params.generation)

    def _execute_render(self, job: Job) -> None:
        with self._lock:
            if job.param_gen < self._params.generation:
                self.skipped_renders += 1
                return  # superseded while queued
            if (job.revision_id, job.param_gen) in self._images:
                self.skipped_renders += 1
                return  # already rendered for this generation
            revision = self.store.get(job.revision_id)
            artifact = self.cache.get(revision.id)

        if artifact is None:
            rebuilt = self.adapter.compile(revision.source)
            if not rebuilt.ok:
                log.error("re-compile of stored revision %s failed",
                          revision.id)
                return
            artifact = rebuilt.artifact
            self.cache.put(revision.id, artifact)

        decls = extract_params(revision.source, self.adapter)
        effective = effective_params(decls, job.params, drop_mismatched=True)
        image = self.adapter.run(artifact, effective.values,
                                 self.width, self.height)

        with self._lock:
            self._images[(revision.id, job.param_gen)] = image
        self._notify("image.ready", {
            "sessionId": self.session_id,
            "revisionId": revision.id,
            "ref": result_ref(revision.id, job.param_gen),
            "paramGen": job.param_gen,
        })

    # -- session operations ------------------------------------------------

    def checkout(self, revision_id: str) -> dict[str, str]:
        """Switch the current state; returns the revision's files."""
        with self._lock:
            revision = self.store.get(revision_id)
            moved = revision.id != self._current
            self._current = revision.id
        if moved:
            self._notify("tree.changed", {"sessionId": self.session_id})
        self._refresh_branch(revision.id)
        return dict(revision.source.files)

    def _refresh_branch(self, head: str) -> None:
        """Queue renders for branch revisions missing an image at the
        active generation; existing images are skipped at execution."""
        with self._lock:
            params = self._params
            gen = params.generation
            missing = [rid for rid in self.store.branch_path(head)
                       if (rid, gen) not in self._images]
        if missing:
            self.queue.schedule_branch_refresh(
                self.session_id, missing, params, gen)

    def set_params(self, values: Mapping[str, object]) -> int:
        """Merge values into the active set and re-render the whole branch,
        newest revision first.  Returns the new generation."""
        with self._lock:
            decls = []
            if self._current is not None:
                decls = extract_params(self.store.get(self._current).source,
                                       self.adapter)
            coerced = check_declared_types(decls, values)
            generation = self._params.generation + 1
            self._params = self._params.merged(coerced, generation)
            # refs older than the previous generation go stale
            self._images = {key: img for key, img in self._images.items()
                            if key[1] >= generation - 1}
            branch = (self.store.branch_path(self._current)
                      if self._current is not None else [])
            params = self._params
        if branch:
            self.queue.schedule_branch_refresh(
                self.session_id, branch, params, generation)
        return generation

    def get_diff(self, from_rev: str, to_rev: str,
                 direction: str = "forward") -> tuple[FileDiff, ...]:
        """Line diffs between two revisions; "backward" swaps the sides."""
        if direction not in ("forward", "backward"):
            raise ValueError(f"direction must be forward or backward, "
                             f"got {direction!r}")
        a = self.store.get(from_rev).source.files
        b = self.store.get(to_rev).source.files
        if direction == "backward":
            a, b = b, a
        return revision_diff(a, b)

    def view_tree(self) -> dict:
        with self._lock:
            revisions = list(self.store.revisions())
            head = self._current
            expanded = frozenset(self._expanded)
            generation = self._params.generation
        return tree_payload(revisions, head, current=head,
                            expanded=expanded, param_gen=generation)

    def expand_group(self, group_id: str, expanded: bool) -> None:
        with self._lock:
            groups = compress_tree(self.store.revisions())
            if group_id not in {g.group_id for g in groups}:
                raise UnknownGroup(f"no group {group_id!r}")
            if expanded:
                self._expanded.add(group_id)
            else:
                self._expanded.discard(group_id)
        self._notify("tree.changed", {"sessionId": self.session_id})

    def get_image(self, ref: str) -> bytes:
        """Resolve an opaque image ref to PNG bytes."""
        kind, ident, gen = parse_image_ref(ref)
        with self._lock:
            if kind == "result":
                image = self._images.get((ident, gen))
                if image is None:
                    raise UnknownImage(f"no rendered image for {ref!r}")
                return encode_png(image)
            groups = compress_tree(self.store.revisions(),
                                   expanded=frozenset(self._expanded))
            group = next((g for g in groups if g.group_id == ident), None)
            if group is None:
                raise UnknownImage(f"no group for {ref!r}")
            on_branch = (set(self.store.branch_path(self._current))
                         if self._current is not None else set())
            stack = [self._images[(m, gen)] for m in group.members
                     if m in on_branch and (m, gen) in self._images]
            if len(stack) < 2:
                raise UnknownImage(f"variance needs two images for {ref!r}")
            return encode_png(variance_image(stack))

    # -- worker threads ----------------------------------------------------

    def _start_workers(self) -> None:
        self._threads.append(threading.Thread(
            target=self._debounce_loop, name="debounce", daemon=True))
        self._threads.append(threading.Thread(
            target=self._compile_loop, name="compile", daemon=True))
        for i in range(self.config.render_workers):
            self._threads.append(threading.Thread(
                target=self._render_loop, name=f"render-{i}", daemon=True))
        for thread in self._threads:
            thread.start()

    def _debounce_loop(self) -> None:
        while True:
            with self._edit_cond:
                if self._closed:
                    return
                deadline = self.debouncer.next_deadline()
                if deadline is None:
                    self._edit_cond.wait(timeout=0.5)
                    continue
                wait = deadline - time.monotonic()
                if wait > 0:
                    self._edit_cond.wait(timeout=wait)
                    continue
                due = self.debouncer.due(time.monotonic())
            for sid, source in due:
                self.queue.submit_compile(sid, source)

    def _compile_loop(self) -> None:
        while not self.queue.closed:
            job = self.queue.wait_compile(timeout=0.25)
            if job is not None:
                self._run_safely(job)

    def _render_loop(self) -> None:
        while not self.queue.closed:
            job = self.queue.wait_render(timeout=0.25)
            if job is not None:
                self._run_safely(job)

    def _run_safely(self, job: Job) -> None:
        try:
            self._execute(job)
        except Exception:
            log.exception("%s job %d failed", job.kind, job.seq)

    def close(self) -> None:
        with self._edit_cond:
            self._closed = True
            self._edit_cond.notify_all()
        self.queue.close()
        for thread in self._threads:
            thread.join(timeout=5.0)
        self._threads.clear()
