"""The bundled expression language and its deterministic renderer.

A program declares parameters, optional helper functions, and exactly one
``pixel`` block whose expression is evaluated per pixel:

    param scale = 2.0 range 0.5 8.0;
    fn wave(t) { sin(t * scale) }
    pixel { rgb(wave(x), wave(y), 0.2) }

Pixel centers feed the reserved names: x = (col+0.5)/width and
y = (row+0.5)/height with row 0 at the top.  A scalar result broadcasts to
all channels; rgb(r,g,b) sets them individually and may only form the whole
result of the pixel block or of a function body, since the language has no
vector arithmetic.  Channels are clamped to [0,1] and quantized half-up to
bytes; non-finite values render as 0, so division by zero cannot fail a run.

Everything is double precision and free of hidden state, which makes renders
byte-identical across runs and machines.

Vec3 parameters surface as scalar components: ``param p = (1,2,3);`` defines
p_x, p_y and p_z inside expressions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..images import Image, quantize
from ..params import FLOAT, VEC3, ParameterDecl, ParamValue
from ..scopes import MINIVIS
from ..store import SourceState
from .base import CompileResult, Diagnostic, ToolchainAdapter

KEYWORDS = frozenset({"param", "fn", "pixel", "range"})
RESERVED_PIXEL = ("x", "y")

# builtin name -> arity; rgb is handled separately because of its color rule
BUILTINS = {
    "sin": 1, "cos": 1, "sqrt": 1, "abs": 1, "floor": 1,
    "min": 2, "max": 2, "clamp": 3, "step": 2, "mix": 3,
}
RGB = "rgb"

SCALAR = "scalar"
COLOR = "color"


# -- syntax tree --

@dataclass(frozen=True)
class Num:
    value: float
    line: int
    col: int


@dataclass(frozen=True)
class Name:
    id: str
    line: int
    col: int


@dataclass(frozen=True)
class Unary:
    operand: "Expr"
    line: int
    col: int


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    line: int
    col: int


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]
    line: int
    col: int


Expr = Num | Name | Unary | Binary | Call


@dataclass(frozen=True)
class FnDecl:
    name: str
    args: tuple[str, ...]
    body: Expr
    file: str
    line: int
    col: int


@dataclass(frozen=True)
class PixelBlock:
    body: Expr
    file: str
    line: int
    col: int


@dataclass(frozen=True)
class CompiledProgram:
    """Artifact of a successful compile; immutable and shareable."""

    params: tuple[ParameterDecl, ...]
    fns: dict[str, FnDecl]
    fn_kinds: dict[str, str]
    pixel: PixelBlock


# -- lexer --

@dataclass(frozen=True)
class _Token:
    kind: str  # ident | number | punct | eof
    text: str
    line: int
    col: int


class _ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col


_PUNCT = set("(){},;=+-*/")


def _lex(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i, n = 0, len(text)

    def bump(count: int):
        nonlocal i, line, col
        for j in range(i, i + count):
            if text[j] == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += count

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            bump(1)
        elif text.startswith("//", i):
            end = text.find("\n", i)
            bump((end if end != -1 else n) - i)
        elif text.startswith("/*", i):
            end = text.find("*/", i + 2)
            bump((end + 2 if end != -1 else n) - i)  # unterminated: eat the rest
        elif ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            start, sl, sc = i, line, col
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            bump(j - start)
            tokens.append(_Token("number", text[start:j], sl, sc))
        elif ch.isalpha() or ch == "_":
            start, sl, sc = i, line, col
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            bump(j - start)
            tokens.append(_Token("ident", text[start:j], sl, sc))
        elif ch in _PUNCT:
            tokens.append(_Token("punct", ch, line, col))
            bump(1)
        else:
            raise _ParseError(f"SyntaxError: unexpected character {ch!r}", line, col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


# -- parser --

class _Parser:
    def __init__(self, text: str, path: str):
        self.tokens = _lex(text)
        self.pos = 0
        self.path = path
        self.params: list[tuple[ParameterDecl, int, int]] = []
        self.fns: list[FnDecl] = []
        self.pixels: list[PixelBlock] = []

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            got = tok.text or "end of file"
            raise _ParseError(f"SyntaxError: expected {want!r}, got {got!r}",
                              tok.line, tok.col)
        return self.next()

    def parse(self) -> None:
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind == "ident" and tok.text == "param":
                self.param_decl()
            elif tok.kind == "ident" and tok.text == "fn":
                self.fn_decl()
            elif tok.kind == "ident" and tok.text == "pixel":
                self.pixel_block()
            else:
                raise _ParseError(
                    f"SyntaxError: expected 'param', 'fn' or 'pixel', got {tok.text!r}",
                    tok.line, tok.col)

    def ident(self, what: str) -> _Token:
        tok = self.expect("ident")
        if tok.text in KEYWORDS:
            raise _ParseError(f"SyntaxError: {tok.text!r} is a keyword, not a {what}",
                              tok.line, tok.col)
        return tok

    def signed_number(self) -> float:
        sign = 1.0
        tok = self.peek()
        if tok.kind == "punct" and tok.text == "-":
            self.next()
            sign = -1.0
        tok = self.expect("number")
        return sign * float(tok.text)

    def param_decl(self) -> None:
        self.expect("ident", "param")
        name_tok = self.ident("parameter name")
        if name_tok.text in RESERVED_PIXEL:
            raise _ParseError(
                f"SyntaxError: {name_tok.text!r} is reserved for pixel coordinates",
                name_tok.line, name_tok.col)
        self.expect("punct", "=")
        if self.peek().kind == "punct" and self.peek().text == "(":
            self.next()
            a = self.signed_number()
            self.expect("punct", ",")
            b = self.signed_number()
            self.expect("punct", ",")
            c = self.signed_number()
            self.expect("punct", ")")
            value: ParamValue = (a, b, c)
            ptype = VEC3
        else:
            value = self.signed_number()
            ptype = FLOAT
        rng = None
        if self.peek().kind == "ident" and self.peek().text == "range":
            rng_tok = self.next()
            lo = self.signed_number()
            hi = self.signed_number()
            if ptype != FLOAT:
                raise _ParseError("SyntaxError: range only applies to float parameters",
                                  rng_tok.line, rng_tok.col)
            rng = (lo, hi)
        self.expect("punct", ";")
        try:
            decl = ParameterDecl(name_tok.text, ptype, value, rng)
        except Exception as exc:
            raise _ParseError(f"SyntaxError: {exc}", name_tok.line, name_tok.col)
        self.params.append((decl, name_tok.line, name_tok.col))

    def fn_decl(self) -> None:
        kw = self.expect("ident", "fn")
        name_tok = self.ident("function name")
        if name_tok.text in RESERVED_PIXEL:
            raise _ParseError(
                f"SyntaxError: {name_tok.text!r} is reserved for pixel coordinates",
                name_tok.line, name_tok.col)
        self.expect("punct", "(")
        args: list[str] = []
        if not (self.peek().kind == "punct" and self.peek().text == ")"):
            while True:
                arg = self.ident("argument name")
                if arg.text in args:
                    raise _ParseError(f"SyntaxError: duplicate argument {arg.text!r}",
                                      arg.line, arg.col)
                args.append(arg.text)
                if self.peek().kind == "punct" and self.peek().text == ",":
                    self.next()
                    continue
                break
        self.expect("punct", ")")
        self.expect("punct", "{")
        body = self.expr()
        self.expect("punct", "}")
        self.fns.append(FnDecl(name_tok.text, tuple(args), body, self.path,
                               kw.line, kw.col))

    def pixel_block(self) -> None:
        kw = self.expect("ident", "pixel")
        self.expect("punct", "{")
        body = self.expr()
        self.expect("punct", "}")
        self.pixels.append(PixelBlock(body, self.path, kw.line, kw.col))

    # expression grammar: additive > multiplicative > unary > primary
    def expr(self) -> Expr:
        left = self.term()
        while self.peek().kind == "punct" and self.peek().text in "+-":
            op = self.next()
            left = Binary(op.text, left, self.term(), op.line, op.col)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek().kind == "punct" and self.peek().text in "*/":
            op = self.next()
            left = Binary(op.text, left, self.unary(), op.line, op.col)
        return left

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "punct" and tok.text == "-":
            self.next()
            return Unary(self.unary(), tok.line, tok.col)
        return self.primary()

    def primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "number":
            self.next()
            return Num(float(tok.text), tok.line, tok.col)
        if tok.kind == "ident":
            if tok.text in KEYWORDS:
                raise _ParseError(f"SyntaxError: unexpected keyword {tok.text!r}",
                                  tok.line, tok.col)
            self.next()
            if self.peek().kind == "punct" and self.peek().text == "(":
                self.next()
                args: list[Expr] = []
                if not (self.peek().kind == "punct" and self.peek().text == ")"):
                    while True:
                        args.append(self.expr())
                        if self.peek().kind == "punct" and self.peek().text == ",":
                            self.next()
                            continue
                        break
                self.expect("punct", ")")
                return Call(tok.text, tuple(args), tok.line, tok.col)
            return Name(tok.text, tok.line, tok.col)
        if tok.kind == "punct" and tok.text == "(":
            self.next()
            inner = self.expr()
            self.expect("punct", ")")
            return inner
        raise _ParseError(f"SyntaxError: expected an expression, got {tok.text or 'end of file'!r}",
                          tok.line, tok.col)


# -- semantic checks --

def _calls_in(node: Expr) -> list[Call]:
    if isinstance(node, Call):
        found = [node]
        for arg in node.args:
            found.extend(_calls_in(arg))
        return found
    if isinstance(node, Unary):
        return _calls_in(node.operand)
    if isinstance(node, Binary):
        return _calls_in(node.left) + _calls_in(node.right)
    return []


def _find_recursion(fns: dict[str, FnDecl]) -> tuple[str, Call] | None:
    """First call that closes a cycle in the function call graph, if any."""
    DONE, ACTIVE = 2, 1
    state: dict[str, int] = {}

    def visit(name: str) -> tuple[str, Call] | None:
        state[name] = ACTIVE
        for call in _calls_in(fns[name].body):
            if call.name not in fns:
                continue
            if state.get(call.name) == ACTIVE:
                return (name, call)
            if state.get(call.name) != DONE:
                hit = visit(call.name)
                if hit:
                    return hit
        state[name] = DONE
        return None

    for name in fns:
        if state.get(name) != DONE:
            hit = visit(name)
            if hit:
                return hit
    return None


def _fn_kinds(fns: dict[str, FnDecl]) -> dict[str, str]:
    """Scalar or color per function; a color body is rooted in rgb(...) or in
    a call to another color function.  Assumes the call graph is acyclic."""
    kinds: dict[str, str] = {}

    def kind_of(name: str) -> str:
        if name in kinds:
            return kinds[name]
        kinds[name] = SCALAR  # provisional, protects against malformed input
        root = fns[name].body
        if isinstance(root, Call):
            if root.name == RGB:
                kinds[name] = COLOR
            elif root.name in fns:
                kinds[name] = kind_of(root.name)
        return kinds[name]

    for name in fns:
        kind_of(name)
    return kinds


class _Checker:
    def __init__(self, fns: dict[str, FnDecl], fn_kinds: dict[str, str], file: str):
        self.fns = fns
        self.fn_kinds = fn_kinds
        self.file = file
        self.diagnostics: list[Diagnostic] = []

    def report(self, message: str, node) -> None:
        self.diagnostics.append(Diagnostic(message, self.file, node.line, node.col))

    def check(self, node: Expr, env: frozenset[str], allow_color: bool) -> None:
        if isinstance(node, Num):
            return
        if isinstance(node, Name):
            if node.id not in env:
                self.report(f"UnknownIdentifier: '{node.id}'", node)
            return
        if isinstance(node, Unary):
            self.check(node.operand, env, False)
            return
        if isinstance(node, Binary):
            self.check(node.left, env, False)
            self.check(node.right, env, False)
            return
        # calls
        if node.name == RGB:
            if not allow_color:
                self.report("SyntaxError: rgb(...) must be the whole expression", node)
            self.check_arity(node, 3)
        elif node.name in self.fns:
            if self.fn_kinds.get(node.name) == COLOR and not allow_color:
                self.report(
                    f"SyntaxError: '{node.name}' returns a color and cannot be used in arithmetic",
                    node)
            self.check_arity(node, len(self.fns[node.name].args))
        elif node.name in BUILTINS:
            self.check_arity(node, BUILTINS[node.name])
        else:
            self.report(f"UnknownIdentifier: no function '{node.name}'", node)
        for arg in node.args:
            self.check(arg, env, False)

    def check_arity(self, node: Call, want: int) -> None:
        if len(node.args) != want:
            self.report(
                f"ArityMismatch: '{node.name}' takes {want} argument{'s' if want != 1 else ''}, got {len(node.args)}",
                node)


def _value_names(params: list[ParameterDecl]) -> frozenset[str]:
    names: set[str] = set()
    for decl in params:
        if decl.type == VEC3:
            names.update(f"{decl.name}_{axis}" for axis in "xyz")
        else:
            names.add(decl.name)
    return frozenset(names)


def minivis_compile(source: SourceState) -> CompileResult:
    """Parse and check a snapshot; success yields a runnable artifact."""
    params: list[tuple[ParameterDecl, str, int, int]] = []
    fns: list[FnDecl] = []
    pixels: list[PixelBlock] = []
    diagnostics: list[Diagnostic] = []

    for path, text in source.files.items():
        parser = _Parser(text, path)
        try:
            parser.parse()
        except _ParseError as err:
            diagnostics.append(Diagnostic(err.message, path, err.line, err.col))
            continue
        params.extend((d, path, line, col) for d, line, col in parser.params)
        fns.extend(parser.fns)
        pixels.extend(parser.pixels)

    if diagnostics:
        return CompileResult(ok=False, diagnostics=tuple(diagnostics))

    decls: list[ParameterDecl] = []
    seen_params: set[str] = set()
    for decl, path, line, col in params:
        if decl.name in seen_params:
            diagnostics.append(Diagnostic(
                f"SyntaxError: duplicate parameter {decl.name!r}", path, line, col))
        else:
            seen_params.add(decl.name)
            decls.append(decl)

    fn_map: dict[str, FnDecl] = {}
    for fn in fns:
        if fn.name in fn_map or fn.name in BUILTINS or fn.name == RGB:
            diagnostics.append(Diagnostic(
                f"SyntaxError: duplicate or builtin function name {fn.name!r}",
                fn.file, fn.line, fn.col))
        else:
            fn_map[fn.name] = fn

    if not pixels:
        diagnostics.append(Diagnostic("MissingPixelBlock: no pixel block found"))
    for extra in pixels[1:]:
        diagnostics.append(Diagnostic(
            "MultiplePixelBlocks: more than one pixel block",
            extra.file, extra.line, extra.col))

    recursion = _find_recursion(fn_map)
    if recursion:
        owner, call = recursion
        diagnostics.append(Diagnostic(
            f"RecursionNotSupported: call to '{call.name}' creates a cycle",
            fn_map[owner].file, call.line, call.col))

    fn_kinds = _fn_kinds(fn_map) if not recursion else {name: SCALAR for name in fn_map}

    param_names = _value_names(decls)
    for fn in fn_map.values():
        checker = _Checker(fn_map, fn_kinds, fn.file)
        env = param_names | frozenset(fn.args)
        checker.check(fn.body, env, allow_color=True)
        diagnostics.extend(checker.diagnostics)
    if pixels:
        checker = _Checker(fn_map, fn_kinds, pixels[0].file)
        env = param_names | frozenset(RESERVED_PIXEL)
        checker.check(pixels[0].body, env, allow_color=True)
        diagnostics.extend(checker.diagnostics)

    if diagnostics:
        return CompileResult(ok=False, diagnostics=tuple(diagnostics))
    artifact = CompiledProgram(tuple(decls), fn_map, fn_kinds, pixels[0])
    return CompileResult(ok=True, artifact=artifact)


# -- evaluation --

class _Evaluator:
    def __init__(self, program: CompiledProgram, base_env: dict[str, float]):
        self.program = program
        self.base_env = base_env

    def scalar(self, node: Expr, env: dict) -> np.ndarray | float:
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Name):
            return env[node.id]
        if isinstance(node, Unary):
            return -self.scalar(node.operand, env)
        if isinstance(node, Binary):
            left = self.scalar(node.left, env)
            right = self.scalar(node.right, env)
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            if node.op == "*":
                return left * right
            return np.divide(left, right)
        return self.call(node, env)

    def call(self, node: Call, env: dict):
        args = [self.scalar(arg, env) for arg in node.args]
        name = node.name
        if name in self.program.fns:
            fn = self.program.fns[name]
            fenv = dict(self.base_env)
            fenv.update(zip(fn.args, args))
            return self.scalar(fn.body, fenv)
        if name == "sin":
            return np.sin(args[0])
        if name == "cos":
            return np.cos(args[0])
        if name == "sqrt":
            return np.sqrt(args[0])
        if name == "abs":
            return np.abs(args[0])
        if name == "floor":
            return np.floor(args[0])
        if name == "min":
            return np.minimum(args[0], args[1])
        if name == "max":
            return np.maximum(args[0], args[1])
        if name == "clamp":
            return np.minimum(np.maximum(args[0], args[1]), args[2])
        if name == "step":
            return np.where(np.less(args[1], args[0]), 0.0, 1.0)
        if name == "mix":
            a, b, t = args
            return a * (1.0 - t) + b * t
        raise AssertionError(f"unchecked call {name!r}")  # compile guarantees absence

    def color(self, node: Expr, env: dict) -> tuple:
        """Evaluate a root position: rgb / color-fn calls split into channels."""
        if isinstance(node, Call):
            if node.name == RGB:
                return tuple(self.scalar(arg, env) for arg in node.args)
            fn = self.program.fns.get(node.name)
            if fn is not None and self.program.fn_kinds.get(node.name) == COLOR:
                args = [self.scalar(arg, env) for arg in node.args]
                fenv = dict(self.base_env)
                fenv.update(zip(fn.args, args))
                return self.color(fn.body, fenv)
        value = self.scalar(node, env)
        return (value, value, value)


def minivis_run(artifact: CompiledProgram, params: dict[str, ParamValue],
                width: int, height: int) -> Image:
    """Render the program; missing parameter values fall back to defaults."""
    base_env: dict[str, float] = {}
    for decl in artifact.params:
        value = params.get(decl.name, decl.default)
        if decl.type == VEC3:
            for axis, component in zip("xyz", value):  # type: ignore[arg-type]
                base_env[f"{decl.name}_{axis}"] = float(component)
        else:
            base_env[decl.name] = float(value)  # type: ignore[arg-type]

    xs = (np.arange(width, dtype=np.float64) + 0.5) / width
    ys = (np.arange(height, dtype=np.float64) + 0.5) / height
    env = dict(base_env)
    env["x"] = xs[None, :]
    env["y"] = ys[:, None]

    evaluator = _Evaluator(artifact, base_env)
    with np.errstate(all="ignore"):
        channels = evaluator.color(artifact.pixel.body, env)
        arr = np.empty((height, width, 3), dtype=np.float64)
        for c, channel in enumerate(channels):
            arr[:, :, c] = np.broadcast_to(np.asarray(channel, dtype=np.float64),
                                           (height, width))
        arr[~np.isfinite(arr)] = 0.0
    return Image.from_array(quantize(arr))


class MinivisAdapter(ToolchainAdapter):
    id = "minivis"
    scope_profile = MINIVIS

    def declared_params(self, source: SourceState) -> list[ParameterDecl]:
        """Collect declarations by parsing alone; order of first declaration.

        Duplicates are preserved so callers enforcing uniqueness can reject
        them; unparseable trailing content simply ends the collection, which
        is safe because sessions only call this on sources that compiled.
        """
        decls: list[ParameterDecl] = []
        for path, text in source.files.items():
            parser = _Parser(text, path)
            try:
                parser.parse()
            except _ParseError:
                pass
            decls.extend(decl for decl, _, _ in parser.params)
        return decls

    def compile(self, source: SourceState) -> CompileResult:
        return minivis_compile(source)

    def run(self, artifact: object, params: dict[str, ParamValue],
            width: int, height: int) -> Image:
        assert isinstance(artifact, CompiledProgram)
        return minivis_run(artifact, params, width, height)
