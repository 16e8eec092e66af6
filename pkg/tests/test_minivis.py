"""Expression-language toolchain checks.

The rendering oracle below walks every pixel in pure Python using the math
module, mirroring each builtin's defining expression, so the vectorized
renderer is compared against an implementation it shares nothing with.
"""

import math

import pytest

from visevo.store import SourceState
from visevo.toolchain.minivis import MinivisAdapter, minivis_compile, minivis_run

adapter = MinivisAdapter()


def compile_ok(text, extra_files=None):
    files = {"main.vis": text}
    if extra_files:
        files.update(extra_files)
    result = minivis_compile(SourceState(files))
    assert result.ok, [d.message for d in result.diagnostics]
    return result.artifact


def compile_fail(text, extra_files=None):
    files = {"main.vis": text}
    if extra_files:
        files.update(extra_files)
    result = minivis_compile(SourceState(files))
    assert not result.ok
    assert result.artifact is None
    assert result.diagnostics
    return result.diagnostics


def render_oracle(fn, width, height):
    """Per-pixel reference rendering: fn(x, y) -> scalar or (r, g, b)."""
    out = bytearray()
    for row in range(height):
        y = (row + 0.5) / height
        for col in range(width):
            x = (col + 0.5) / width
            value = fn(x, y)
            channels = value if isinstance(value, tuple) else (value,) * 3
            for c in channels:
                if not math.isfinite(c):
                    c = 0.0
                c = min(1.0, max(0.0, c))
                out.append(math.floor(c * 255.0 + 0.5))
    return bytes(out)


# -- compile behavior --

def test_minimal_program_compiles():
    artifact = compile_ok("pixel { x }")
    assert artifact.params == ()


def test_unknown_identifier_position():
    diags = compile_fail("pixel { foo }")
    assert diags[0].message == "UnknownIdentifier: 'foo'"
    assert (diags[0].file, diags[0].line, diags[0].col) == ("main.vis", 1, 9)


def test_param_and_fn_declarations():
    artifact = compile_ok("param a=0.5; fn g(t){t*a} pixel{g(x)}")
    assert len(artifact.params) == 1
    decl = artifact.params[0]
    assert (decl.name, decl.type, decl.default, decl.range) == ("a", "float", 0.5, None)


def test_param_range_and_vec3():
    artifact = compile_ok("param a=0.5 range 0 1; param p=(0,0,5); pixel{a + p_z}")
    a, p = artifact.params
    assert a.range == (0.0, 1.0)
    assert (p.type, p.default) == ("vec3", (0.0, 0.0, 5.0))


def test_negative_defaults_and_exponents():
    artifact = compile_ok("param a=-0.5 range -1 1; param p=(-1,2e2,.5); pixel{a+p_y}")
    assert artifact.params[0].default == -0.5
    assert artifact.params[1].default == (-1.0, 200.0, 0.5)


def test_declared_params_via_adapter():
    decls = adapter.declared_params(SourceState(
        {"main.vis": "param cam_eye=(0,0,5); pixel{cam_eye_x}"}))
    assert len(decls) == 1 and decls[0].name == "cam_eye" and decls[0].type == "vec3"


def test_comments_are_skipped():
    compile_ok("// leading\nparam a=1; /* block { } */ pixel { a // end\n }")


def test_syntax_errors():
    assert compile_fail("pixel { x + }")[0].message.startswith("SyntaxError:")
    assert compile_fail("param a 1; pixel{1}")[0].message.startswith("SyntaxError:")
    assert compile_fail("what { }")[0].message.startswith("SyntaxError:")
    assert compile_fail("param a=1 range 1 1; pixel{a}")[0].message.startswith("SyntaxError:")
    assert compile_fail("param p=(1,2,3) range 0 1; pixel{1}")[0].message.startswith("SyntaxError:")
    assert compile_fail("pixel { x } trailing")[0].message.startswith("SyntaxError:")
    assert compile_fail("")[0].message.startswith("MissingPixelBlock")


def test_pixel_block_count_rules():
    diags = compile_fail("param a=1;")
    assert any(d.message.startswith("MissingPixelBlock") for d in diags)
    diags = compile_fail("pixel { x } pixel { y }")
    assert any(d.message.startswith("MultiplePixelBlocks") for d in diags)
    diags = compile_fail("pixel { x }", extra_files={"b.vis": "pixel { y }"})
    assert any(d.message.startswith("MultiplePixelBlocks") for d in diags)


def test_multi_file_shared_namespace():
    artifact = compile_ok("pixel { helper(x) * level }",
                          extra_files={"lib.vis": "param level=0.5; fn helper(t){t+0.1}"})
    assert [d.name for d in artifact.params] == ["level"]


def test_duplicate_names():
    diags = compile_fail("param a=1; param a=2; pixel{a}")
    assert any("duplicate parameter" in d.message for d in diags)
    diags = compile_fail("fn f(t){t} fn f(u){u} pixel{f(1)}")
    assert any("duplicate or builtin" in d.message for d in diags)
    diags = compile_fail("fn sin(t){t} pixel{sin(1)}")
    assert any("duplicate or builtin" in d.message for d in diags)
    diags = compile_fail("fn f(t, t){t} pixel{f(1,2)}")
    assert any("duplicate argument" in d.message for d in diags)


def test_reserved_names():
    assert compile_fail("param x=1; pixel{x}")[0].message.startswith("SyntaxError:")
    assert compile_fail("fn y(){1} pixel{1}")[0].message.startswith("SyntaxError:")
    assert compile_fail("param range=1; pixel{1}")[0].message.startswith("SyntaxError:")
    # fn arguments may shadow the pixel coordinates
    compile_ok("fn id(x){x} pixel{id(y)}")


def test_arity_checks():
    diags = compile_fail("pixel { sin(x, y) }")
    assert diags[0].message == "ArityMismatch: 'sin' takes 1 argument, got 2"
    diags = compile_fail("fn g(a, b){a+b} pixel { g(1) }")
    assert "ArityMismatch: 'g' takes 2 arguments" in diags[0].message
    diags = compile_fail("pixel { clamp(x, 0) }")
    assert diags[0].message.startswith("ArityMismatch")
    diags = compile_fail("pixel { nosuch(1) }")
    assert diags[0].message == "UnknownIdentifier: no function 'nosuch'"


def test_recursion_is_rejected():
    diags = compile_fail("fn f(t){f(t)} pixel{f(x)}")
    assert any(d.message.startswith("RecursionNotSupported") for d in diags)
    diags = compile_fail("fn a(t){b(t)+1} fn b(t){a(t)} pixel{a(x)}")
    assert any(d.message.startswith("RecursionNotSupported") for d in diags)
    # diamond call shapes are fine
    compile_ok("fn leaf(t){t} fn l(t){leaf(t)} fn r(t){leaf(t)} pixel{l(x)+r(y)}")


def test_color_positions():
    compile_ok("pixel { rgb(x, y, 0.5) }")
    compile_ok("fn tint(t){rgb(t, 0, 1-t)} pixel { tint(x) }")
    diags = compile_fail("pixel { rgb(1,0,0) + 1 }")
    assert any("rgb" in d.message and d.message.startswith("SyntaxError") for d in diags)
    diags = compile_fail("fn c(){rgb(1,0,0)} pixel { c() * 2 }")
    assert any("returns a color" in d.message for d in diags)
    diags = compile_fail("pixel { rgb(rgb(1,0,0), 0, 0) }")
    assert any(d.message.startswith("SyntaxError") for d in diags)


def test_vec3_components_only():
    diags = compile_fail("param p=(1,2,3); pixel { p }")
    assert diags[0].message == "UnknownIdentifier: 'p'"
    diags = compile_fail("param a=1; pixel { a_x }")
    assert diags[0].message == "UnknownIdentifier: 'a_x'"


# -- run behavior --

def run_text(text, params=None, width=4, height=4):
    return minivis_run(compile_ok(text), params or {}, width, height)


def test_constant_programs():
    assert run_text("pixel { 0 }").pixels == bytes(48)
    assert run_text("pixel { 1 }").pixels == b"\xff" * 48


def test_pixel_centers_hand_case():
    img = run_text("pixel { x }", width=2, height=1)
    assert list(img.pixels) == [64, 64, 64, 191, 191, 191]


def test_row_zero_is_top():
    img = run_text("pixel { step(0.5, y) }", width=2, height=2)
    arr = img.to_array()
    assert (arr[0] == 0).all()      # y = 0.25 above the edge
    assert (arr[1] == 255).all()    # y = 0.75 below it


def test_resolution_consistency():
    for size in [(1, 1), (3, 5), (16, 16)]:
        img = run_text("param a=0.25; pixel { a * 2 }", width=size[0], height=size[1])
        assert set(img.pixels) == {128}
        assert img.size() == size


def test_default_substitution_equivalence():
    artifact = compile_ok("param a=0.3; pixel { a + x * 0 }")
    assert minivis_run(artifact, {}, 4, 4).pixels == \
        minivis_run(artifact, {"a": 0.3}, 4, 4).pixels


def test_param_override_changes_output():
    artifact = compile_ok("param a=0.2; pixel { a }")
    assert minivis_run(artifact, {"a": 1.0}, 2, 2).pixels == b"\xff" * 12


def test_determinism():
    artifact = compile_ok(
        "param w=6.0; fn f(t){sin(t*w)*0.5+0.5} pixel { rgb(f(x), f(y), f(x+y)) }")
    first = minivis_run(artifact, {"w": 7.5}, 32, 32)
    second = minivis_run(artifact, {"w": 7.5}, 32, 32)
    assert first.pixels == second.pixels


def test_division_by_zero_renders_black():
    assert run_text("pixel { 1 / 0 }").pixels == bytes(48)
    assert run_text("pixel { 0 / 0 }").pixels == bytes(48)
    assert run_text("pixel { sqrt(0 - 1) }").pixels == bytes(48)


def test_nonfinite_only_poisons_final_value():
    # an infinite intermediate folded away by min() must not zero the pixel
    assert run_text("pixel { min(1/0, 0.5) }").pixels == bytes([128] * 48)


def test_scalar_matches_pixelwise_oracle():
    text = "param w=6.28; pixel { sin(x * w) * 0.5 + 0.5 }"
    img = run_text(text, {"w": 6.28}, width=8, height=5)
    expected = render_oracle(lambda x, y: math.sin(x * 6.28) * 0.5 + 0.5, 8, 5)
    assert img.pixels == expected


def test_color_program_matches_oracle():
    text = ("param p=(0.2,0.4,0.8);"
            "fn band(t){ step(0.3, t) * clamp(t, 0, 1) }"
            "pixel { rgb(band(x) * p_x, mix(x, y, 0.25) * p_y, abs(x - y) + p_z / 4) }")
    img = run_text(text, width=7, height=6)

    def oracle(x, y):
        def band(t):
            return (0.0 if t < 0.3 else 1.0) * min(max(t, 0.0), 1.0)
        return (band(x) * 0.2, (x * (1 - 0.25) + y * 0.25) * 0.4,
                abs(x - y) + 0.8 / 4)

    assert img.pixels == render_oracle(oracle, 7, 6)


def test_unary_minus_and_precedence():
    img = run_text("pixel { -x + 1 - 0.25 * 2 }", width=2, height=1)
    expected = render_oracle(lambda x, y: -x + 1 - 0.25 * 2, 2, 1)
    assert img.pixels == expected
    img = run_text("pixel { (0.1 + 0.2) * 2 }", width=1, height=1)
    assert img.pixels == render_oracle(lambda x, y: (0.1 + 0.2) * 2, 1, 1)


def test_floor_min_max_builtins():
    img = run_text("pixel { max(min(floor(x * 4) / 4, 0.9), 0.1) }", width=8, height=1)
    expected = render_oracle(
        lambda x, y: max(min(math.floor(x * 4) / 4, 0.9), 0.1), 8, 1)
    assert img.pixels == expected


def test_vec3_components_in_run():
    img = run_text("param p=(0,0.5,1); pixel { rgb(p_x, p_y, p_z) }", width=1, height=1)
    assert list(img.pixels) == [0, 128, 255]


def test_artifact_immutable_and_rerunnable():
    artifact = compile_ok("param a=0.5; pixel { a * x }")
    with pytest.raises(AttributeError):
        artifact.pixel = None
    a = minivis_run(artifact, {"a": 0.25}, 4, 4).pixels
    b = minivis_run(artifact, {}, 4, 4).pixels
    assert a != b
    assert minivis_run(artifact, {"a": 0.25}, 4, 4).pixels == a
