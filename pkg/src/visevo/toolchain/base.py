"""Toolchain adapter contract.

An adapter turns a source snapshot into an opaque compiled artifact and an
artifact plus parameters into an image.  compile must not mutate the source;
run must be deterministic for fixed (artifact, params, width, height) so
revision images are reproducible and cache-friendly.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

from ..images import Image
from ..params import ParameterDecl, ParamValue
from ..scopes import C_LIKE, LanguageProfile
from ..store import SourceState


@dataclass(frozen=True)
class Diagnostic:
    """One compiler message; file/line/col stay None when not attributable."""

    message: str
    file: str | None = None
    line: int | None = None
    col: int | None = None

    def to_json(self) -> dict:
        return {"file": self.file, "line": self.line, "col": self.col,
                "message": self.message}


@dataclass(frozen=True)
class CompileResult:
    ok: bool
    diagnostics: tuple[Diagnostic, ...] = ()
    artifact: object | None = None

    def __post_init__(self):
        if self.ok and self.artifact is None:
            raise ValueError("successful compile must carry an artifact")
        if not self.ok and not self.diagnostics:
            raise ValueError("failed compile must carry at least one diagnostic")


class ToolchainAdapter(ABC):
    """Behavioral contract every toolchain implements."""

    id: str = ""
    # Used to parse scope trees out of this toolchain's sources.
    scope_profile: LanguageProfile = C_LIKE

    @abstractmethod
    def declared_params(self, source: SourceState) -> list[ParameterDecl]:
        """Parameters the snapshot declares, in first-declaration order."""

    @abstractmethod
    def compile(self, source: SourceState) -> CompileResult:
        ...

    @abstractmethod
    def run(self, artifact: object, params: dict[str, ParamValue],
            width: int, height: int) -> Image:
        ...
