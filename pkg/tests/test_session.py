"""Session engine behavior: commits on success only, branch-wide renders,
image refs, view payloads, restart recovery."""

import threading

import pytest

from visevo.errors import (
    TypeMismatch,
    UnknownGroup,
    UnknownImage,
    UnknownRevision,
)
from visevo.images import decode_png
from visevo.scheduler import SchedulerConfig
from visevo.session import SessionEngine
from visevo.store import RevisionStore
from visevo.toolchain.minivis import MinivisAdapter

GRAY = "param a = 0.5 range 0 1;\npixel{a}\n"
BAD = "pixel{mystery}\n"


def make_engine(**kwargs) -> tuple[SessionEngine, list]:
    engine = SessionEngine(MinivisAdapter(), **kwargs)
    events: list[tuple[str, dict]] = []
    engine.subscribe(lambda method, params: events.append((method, params)))
    return engine, events


def commit(engine: SessionEngine, text: str, at: float = 0.0) -> str:
    """Edit, let the quiet period pass, run everything queued."""
    engine.update_source({"main.mv": text}, now=at)
    engine.pump(at + engine.debouncer.delay)
    engine.drain()
    return engine.current


def test_successful_update_commits_and_renders():
    engine, events = make_engine()
    engine.update_source({"main.mv": GRAY}, now=0.0)
    assert engine.pump(1.4) == []           # quiet period not over yet
    jobs = engine.pump(1.5)
    assert [j.kind for j in jobs] == ["compile"]
    engine.drain()

    assert len(engine.store) == 1
    rid = engine.current
    assert rid is not None
    methods = [m for m, _ in events]
    assert methods == ["compile.succeeded", "tree.changed", "image.ready"]
    assert events[0][1]["revisionId"] == rid
    assert events[2][1]["ref"] == f"{rid}:0"


def test_failed_compile_leaves_store_untouched():
    engine, events = make_engine()
    commit(engine, BAD)
    assert len(engine.store) == 0
    assert engine.current is None
    assert [m for m, _ in events] == ["compile.failed"]
    diags = events[0][1]["diagnostics"]
    assert any("UnknownIdentifier" in d["message"] for d in diags)


def test_identical_source_resent_is_a_noop_commit():
    engine, events = make_engine()
    first = commit(engine, GRAY, at=0.0)
    events.clear()
    second = commit(engine, GRAY, at=10.0)
    assert second == first
    assert len(engine.store) == 1
    # compile still succeeds, but nothing moved and nothing re-rendered
    assert [m for m, _ in events] == ["compile.succeeded"]
    assert engine.skipped_renders == 1


def test_edits_branch_from_checked_out_revision():
    engine, _ = make_engine()
    a = commit(engine, "pixel{0.1}\n", at=0.0)
    b = commit(engine, "pixel{0.2}\n", at=10.0)
    engine.checkout(a)
    c = commit(engine, "pixel{0.3}\n", at=20.0)
    assert len(engine.store) == 3
    assert engine.store.parent(c) == a
    assert engine.store.parent(b) == a
    view = engine.view_tree()
    assert view["branch"]["colors"][b] == "grey"
    assert view["branch"]["colors"][c] == "blue"
    assert view["branch"]["current"] == c


def test_checkout_returns_files_and_unknown_id_raises():
    engine, _ = make_engine()
    a = commit(engine, GRAY)
    files = engine.checkout(a)
    assert files == {"main.mv": GRAY}
    with pytest.raises(UnknownRevision):
        engine.checkout("f" * 64)


def test_params_set_renders_branch_newest_first():
    engine, events = make_engine()
    revs = [commit(engine, f"param a = 0.5;\npixel{{a + {i}/100}}\n", at=i * 10)
            for i in range(3)]
    events.clear()
    gen = engine.set_params({"a": 0.25})
    assert gen == 1
    engine.drain()
    ready = [p["revisionId"] for m, p in events if m == "image.ready"]
    assert ready == [revs[2], revs[1], revs[0]]
    assert all(p["paramGen"] == 1 for m, p in events if m == "image.ready")


def test_params_merge_and_generation_bump():
    engine, _ = make_engine()
    commit(engine, "param a = 0.1;\nparam b = 0.2;\npixel{a + b}\n")
    engine.set_params({"a": 0.5})
    engine.set_params({"b": 0.7})
    assert engine.generation == 2
    assert engine.active_params.values == {"a": 0.5, "b": 0.7}


def test_params_type_checked_against_current_revision():
    engine, _ = make_engine()
    commit(engine, "param a = 0.5;\npixel{a}\n")
    with pytest.raises(TypeMismatch):
        engine.set_params({"a": [1.0, 2.0, 3.0]})
    # undeclared names only need a valid shape
    engine.set_params({"ghost": 1.0})
    with pytest.raises(TypeMismatch):
        engine.set_params({"ghost": "nope"})


def test_undeclared_param_ignored_at_render():
    engine, events = make_engine()
    rid = commit(engine, "pixel{0.5}\n")
    before = decode_png(engine.get_image(f"{rid}:0"))
    events.clear()
    engine.set_params({"unused": 9.0})
    engine.drain()
    after = decode_png(engine.get_image(f"{rid}:1"))
    assert after.pixels == before.pixels


def test_image_ref_resolves_to_png_at_session_resolution():
    engine, events = make_engine(width=32, height=16)
    commit(engine, GRAY)
    ref = next(p["ref"] for m, p in events if m == "image.ready")
    image = decode_png(engine.get_image(ref))
    assert (image.width, image.height) == (32, 16)
    assert image.pixels[:3] == bytes([128, 128, 128])


def test_refs_two_generations_back_are_evicted():
    engine, _ = make_engine()
    rid = commit(engine, GRAY)
    engine.get_image(f"{rid}:0")
    engine.set_params({"a": 0.2})
    engine.drain()
    engine.get_image(f"{rid}:0")            # previous generation still held
    engine.set_params({"a": 0.3})
    engine.drain()
    with pytest.raises(UnknownImage):
        engine.get_image(f"{rid}:0")
    engine.get_image(f"{rid}:2")


def test_variance_ref_black_for_identical_images():
    engine, _ = make_engine(width=8, height=8)
    # same structure, same output, different text → two-revision group
    commit(engine, "pixel{0.5}\n", at=0.0)
    commit(engine, "pixel{ 0.5 }\n", at=10.0)
    view = engine.view_tree()
    row = view["branch"]["rows"][0]
    assert row["kind"] == "group" and len(row["members"]) == 2
    ref = row["varianceRef"]
    assert ref is not None
    image = decode_png(engine.get_image(ref))
    assert set(image.pixels) == {0}


def test_variance_ref_needs_two_rendered_members():
    engine, _ = make_engine()
    rid = commit(engine, "pixel{0.5}\n")
    with pytest.raises(UnknownImage):
        engine.get_image(f"g{rid}:0")


def test_diff_direction_flips_sides():
    engine, _ = make_engine()
    a = commit(engine, "pixel{0.1}\n", at=0.0)
    b = commit(engine, "param q = 1.0;\npixel{0.1 + q}\n", at=10.0)
    forward = engine.get_diff(a, b)
    backward = engine.get_diff(a, b, direction="backward")

    def counts(diffs):
        add = sum(1 for d in diffs for h in d.hunks
                  for op, _ in h.ops if op == "add")
        rem = sum(1 for d in diffs for h in d.hunks
                  for op, _ in h.ops if op == "remove")
        return add, rem

    fa, fr = counts(forward)
    ba, br = counts(backward)
    assert (fa, fr) == (br, ba)
    with pytest.raises(ValueError):
        engine.get_diff(a, b, direction="sideways")


def test_expand_unknown_group_rejected():
    engine, _ = make_engine()
    commit(engine, GRAY)
    with pytest.raises(UnknownGroup):
        engine.expand_group("f" * 64, True)


def test_expand_changes_rows_and_collapse_restores():
    engine, _ = make_engine()
    commit(engine, "pixel{0.1}\n", at=0.0)
    commit(engine, "pixel{0.2}\n", at=10.0)
    gid = engine.view_tree()["groups"][0]["id"]
    before = engine.view_tree()
    assert [r["kind"] for r in before["branch"]["rows"]] == ["group"]
    engine.expand_group(gid, True)
    mid = engine.view_tree()
    assert [r["kind"] for r in mid["branch"]["rows"]] == ["revision"] * 2
    engine.expand_group(gid, False)
    assert engine.view_tree() == before


def test_restart_reproduces_view_tree(tmp_path):
    store_dir = tmp_path / "store"
    engine, _ = make_engine(store=RevisionStore.open(store_dir))
    commit(engine, "pixel{0.1}\n", at=0.0)
    commit(engine, "pixel{0.2}\n", at=10.0)
    commit(engine, "param a = 0.3;\npixel{a}\n", at=20.0)
    before = engine.view_tree()

    reloaded, _ = make_engine(store=RevisionStore.load(store_dir))
    assert reloaded.view_tree() == before
    # reopened session re-renders the branch on demand
    jobs = reloaded.drain()
    assert {j.revision_id for j in jobs} == set(
        before["branch"]["colors"].keys())
    head_ref = f"{reloaded.current}:0"
    decode_png(reloaded.get_image(head_ref))


def test_threaded_mode_compiles_and_renders():
    engine = SessionEngine(
        MinivisAdapter(), threaded=True,
        config=SchedulerConfig(debounce_ms=50, render_workers=2))
    done = threading.Event()
    seen = []

    def on_event(method, params):
        seen.append(method)
        if method == "image.ready":
            done.set()

    engine.subscribe(on_event)
    try:
        engine.update_source({"main.mv": GRAY})
        assert done.wait(timeout=10.0), f"no image.ready, saw {seen}"
        assert seen.index("compile.succeeded") < seen.index("image.ready")
        assert len(engine.store) == 1
    finally:
        engine.close()
