"""Manifest-driven adapter for real compiler/runtime pairs.

A toolchain manifest is a JSON file with command templates:

    {
      "id": "cpp-soft",
      "buildCmd": "cc {srcDir}/main.c -o {artifact}",
      "runCmd": "{artifact} {paramsFile} {width} {height} {outDir}/out.ppm",
      "imagePath": "{outDir}/out.ppm",
      "timeoutSeconds": 30,
      "params": [{"name": "level", "type": "float", "default": 0.5}],
      "scopeProfile": "c"
    }

Placeholders: {srcDir} (snapshot files), {outDir} (per-invocation output
directory), {artifact} (path the build writes and the run consumes),
{width}, {height}, {paramsFile} (JSON parameter values, vec3 as [x,y,z]).
Each run gets a private output directory so one compiled artifact can render
concurrently.  ``params`` and ``scopeProfile`` are optional; commands run
through the shell with all paths quoted.
"""

from __future__ import annotations

import json
import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

from ..errors import ToolchainRunError
from ..images import Image, decode_auto
from ..params import ParameterDecl, ParamValue
from ..scopes import C_LIKE, PROFILES
from ..store import SourceState
from .base import CompileResult, Diagnostic, ToolchainAdapter

# Mainstream compiler stderr shape: file:line:col: message
_DIAG_RE = re.compile(r"^(?P<file>[^:\s][^:]*):(?P<line>\d+):(?P<col>\d+):\s*(?P<message>.*)$")

_REQUIRED_FIELDS = ("id", "buildCmd", "runCmd", "imagePath", "timeoutSeconds")


@dataclass(frozen=True)
class ExternalArtifact:
    """Build products of one successful external compile."""

    scratch: Path
    src_dir: Path
    artifact_path: Path


def parse_stderr_diagnostics(stderr: str) -> list[Diagnostic]:
    """file:line:col: message per line; anything else becomes file-less."""
    out: list[Diagnostic] = []
    for line in stderr.splitlines():
        if not line.strip():
            continue
        match = _DIAG_RE.match(line)
        if match:
            out.append(Diagnostic(match["message"], match["file"],
                                  int(match["line"]), int(match["col"])))
        else:
            out.append(Diagnostic(line))
    return out


class ExternalAdapter(ToolchainAdapter):
    def __init__(self, manifest: dict):
        missing = [f for f in _REQUIRED_FIELDS if f not in manifest]
        if missing:
            raise ValueError(f"toolchain manifest missing {missing}")
        self.id = str(manifest["id"])
        self.build_cmd = str(manifest["buildCmd"])
        self.run_cmd = str(manifest["runCmd"])
        self.image_path = str(manifest["imagePath"])
        self.timeout = float(manifest["timeoutSeconds"])
        self.scope_profile = PROFILES.get(str(manifest.get("scopeProfile", "c")), C_LIKE)
        self._params = [
            ParameterDecl(
                name=str(p["name"]),
                type=str(p["type"]),
                default=tuple(p["default"]) if isinstance(p["default"], list) else p["default"],
                range=tuple(p["range"]) if p.get("range") else None,
            )
            for p in manifest.get("params", ())
        ]

    @classmethod
    def from_file(cls, path: str | Path) -> "ExternalAdapter":
        return cls(json.loads(Path(path).read_text("utf-8")))

    def declared_params(self, source: SourceState) -> list[ParameterDecl]:
        return list(self._params)

    def _fill(self, template: str, mapping: dict[str, str]) -> str:
        out = template
        for key, value in mapping.items():
            out = out.replace("{" + key + "}", value)
        return out

    def compile(self, source: SourceState) -> CompileResult:
        scratch = Path(tempfile.mkdtemp(prefix=f"visevo-{self.id}-"))
        src_dir = scratch / "src"
        out_dir = scratch / "out"
        out_dir.mkdir(parents=True)
        for path, content in source.files.items():
            target = src_dir / path
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(content, "utf-8")
        artifact_path = out_dir / "artifact"
        cmd = self._fill(self.build_cmd, {
            "srcDir": shlex.quote(str(src_dir)),
            "outDir": shlex.quote(str(out_dir)),
            "artifact": shlex.quote(str(artifact_path)),
        })
        try:
            proc = subprocess.run(cmd, shell=True, cwd=scratch, capture_output=True,
                                  text=True, timeout=self.timeout)
        except subprocess.TimeoutExpired:
            return CompileResult(ok=False, diagnostics=(
                Diagnostic(f"Timeout: build exceeded {self.timeout:g}s"),))
        if proc.returncode != 0:
            diagnostics = parse_stderr_diagnostics(proc.stderr)
            if not diagnostics:
                diagnostics = [Diagnostic(
                    f"NonZeroExit: build exited with code {proc.returncode}")]
            return CompileResult(ok=False, diagnostics=tuple(diagnostics))
        return CompileResult(ok=True, artifact=ExternalArtifact(
            scratch=scratch, src_dir=src_dir, artifact_path=artifact_path))

    def run(self, artifact: object, params: dict[str, ParamValue],
            width: int, height: int) -> Image:
        assert isinstance(artifact, ExternalArtifact)
        run_dir = Path(tempfile.mkdtemp(prefix="run-", dir=artifact.scratch))
        params_file = run_dir / "params.json"
        wire = {name: (list(v) if isinstance(v, tuple) else v)
                for name, v in params.items()}
        params_file.write_text(json.dumps(wire, separators=(",", ":")), "utf-8")
        raw = {
            "srcDir": str(artifact.src_dir),
            "outDir": str(run_dir),
            "artifact": str(artifact.artifact_path),
            "paramsFile": str(params_file),
            "width": str(width),
            "height": str(height),
        }
        quoted = {key: shlex.quote(value) for key, value in raw.items()}
        quoted["width"], quoted["height"] = raw["width"], raw["height"]
        cmd = self._fill(self.run_cmd, quoted)
        try:
            proc = subprocess.run(cmd, shell=True, cwd=artifact.scratch,
                                  capture_output=True, text=True, timeout=self.timeout)
        except subprocess.TimeoutExpired:
            raise ToolchainRunError(f"Timeout: run exceeded {self.timeout:g}s")
        if proc.returncode != 0:
            tail = proc.stderr.strip().splitlines()[-1:] or [""]
            raise ToolchainRunError(
                f"NonZeroExit: run exited with code {proc.returncode}: {tail[0]}")
        image_file = Path(self._fill(self.image_path, raw))
        if not image_file.exists():
            raise ToolchainRunError(f"MissingOutputImage: {image_file} was not produced")
        return decode_auto(image_file.read_bytes())


def load_toolchains(directory: str | Path | None) -> dict[str, ToolchainAdapter]:
    """All manifest adapters under ``directory`` keyed by id."""
    adapters: dict[str, ToolchainAdapter] = {}
    if directory is None:
        return adapters
    directory = Path(directory)
    if not directory.is_dir():
        return adapters
    for manifest_path in sorted(directory.glob("*.json")):
        adapter = ExternalAdapter.from_file(manifest_path)
        adapters[adapter.id] = adapter
    return adapters
