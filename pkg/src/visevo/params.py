"""Parameter declarations, active parameter sets, and camera navigation.

Parameters declared in source stay stable across revisions by name, which is
what lets one slider drag or mouse orbit re-render a whole branch: the active
set lives on the session, not on any revision, and every render resolves it
against the declarations of the revision being drawn.

Camera state is plain parameters under reserved names (cam_eye, cam_at,
cam_up), so toolchains need no camera protocol beyond reading three vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DuplicateParameter, NonPositiveFactor, TypeMismatch

FLOAT = "float"
VEC3 = "vec3"

CAMERA_EYE = "cam_eye"
CAMERA_AT = "cam_at"
CAMERA_UP = "cam_up"
CAMERA_NAMES = (CAMERA_EYE, CAMERA_AT, CAMERA_UP)

Vec3 = tuple[float, float, float]
ParamValue = float | Vec3


def is_float_value(value: object) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def is_vec3_value(value: object) -> bool:
    return (isinstance(value, Sequence) and not isinstance(value, (str, bytes))
            and len(value) == 3 and all(is_float_value(v) for v in value))


def coerce_value(declared: str, raw: object) -> ParamValue:
    """Normalize a wire value to the declared type or raise TypeMismatch."""
    if declared == FLOAT:
        if not is_float_value(raw):
            raise TypeMismatch(f"expected a float, got {raw!r}")
        return float(raw)
    if declared == VEC3:
        if not is_vec3_value(raw):
            raise TypeMismatch(f"expected a three-component vector, got {raw!r}")
        return (float(raw[0]), float(raw[1]), float(raw[2]))
    raise TypeMismatch(f"unknown parameter type {declared!r}")


@dataclass(frozen=True)
class ParameterDecl:
    """One ``param`` declaration from source."""

    name: str
    type: str
    default: ParamValue
    range: tuple[float, float] | None = None

    def __post_init__(self):
        if self.type not in (FLOAT, VEC3):
            raise TypeMismatch(f"unknown parameter type {self.type!r}")
        object.__setattr__(self, "default", coerce_value(self.type, self.default))
        if self.range is not None:
            if self.type != FLOAT:
                raise TypeMismatch(f"range only applies to floats: {self.name}")
            lo, hi = float(self.range[0]), float(self.range[1])
            if not lo < hi:
                raise TypeMismatch(f"empty range [{lo}, {hi}] on {self.name}")
            if not lo <= self.default <= hi:
                raise TypeMismatch(f"default {self.default} outside [{lo}, {hi}] on {self.name}")
            object.__setattr__(self, "range", (lo, hi))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "type": self.type,
            "default": list(self.default) if self.type == VEC3 else self.default,
            "range": list(self.range) if self.range else None,
        }


@dataclass(frozen=True)
class ParameterSet:
    """Session-level overrides plus the generation they belong to.

    The generation increases on every change; renders stamped with an older
    generation are stale and may be dropped or superseded.
    """

    values: Mapping[str, ParamValue] = field(default_factory=dict)
    generation: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", dict(self.values))

    def merged(self, updates: Mapping[str, ParamValue], generation: int) -> "ParameterSet":
        merged = dict(self.values)
        merged.update(updates)
        return ParameterSet(merged, generation)


def check_declared_types(decls: Iterable[ParameterDecl],
                         values: Mapping[str, object]) -> dict[str, ParamValue]:
    """Validate wire values; declared names must match their declared type.

    Undeclared names only need a well-formed shape (float or vec3), since a
    session's active set can carry values for parameters that later revisions
    declare.
    """
    by_name = {d.name: d for d in decls}
    out: dict[str, ParamValue] = {}
    for name, raw in values.items():
        decl = by_name.get(name)
        if decl is not None:
            out[name] = coerce_value(decl.type, raw)
        elif is_float_value(raw):
            out[name] = float(raw)
        elif is_vec3_value(raw):
            out[name] = (float(raw[0]), float(raw[1]), float(raw[2]))
        else:
            raise TypeMismatch(f"value for {name!r} is neither float nor vec3: {raw!r}")
    return out


def effective_params(decls: Iterable[ParameterDecl], active: ParameterSet,
                     *, drop_mismatched: bool = False) -> ParameterSet:
    """Resolve the values a render actually sees, keeping the generation.

    Every declared parameter gets the active override when one exists, the
    declared default otherwise.  Active names no revision declares are
    ignored.  An override whose shape conflicts with the declaration raises
    TypeMismatch unless ``drop_mismatched`` asks to fall back to the default.
    """
    out: dict[str, ParamValue] = {}
    for decl in decls:
        value = decl.default
        if decl.name in active.values:
            raw = active.values[decl.name]
            try:
                value = coerce_value(decl.type, raw)
            except TypeMismatch:
                if not drop_mismatched:
                    raise
        out[decl.name] = value
    return ParameterSet(out, active.generation)


def extract_params(source, adapter) -> list[ParameterDecl]:
    """Declared parameters of a snapshot, rejecting duplicate names."""
    decls = list(adapter.declared_params(source))
    seen: set[str] = set()
    for decl in decls:
        if decl.name in seen:
            raise DuplicateParameter(f"parameter {decl.name!r} declared twice")
        seen.add(decl.name)
    return decls


# -- camera --

def _unit(v: np.ndarray, what: str) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm < 1e-12:
        raise ValueError(f"degenerate {what}")
    return v / norm


@dataclass(frozen=True)
class Camera:
    """Orbit camera; ``up`` is re-orthonormalized against the view direction
    at construction, so instances always satisfy |up| = 1 and up sideways to
    (at - eye)."""

    eye: Vec3
    at: Vec3
    up: Vec3

    def __post_init__(self):
        eye = np.asarray(self.eye, dtype=np.float64)
        at = np.asarray(self.at, dtype=np.float64)
        forward = _unit(at - eye, "camera: eye equals at")
        up = np.asarray(self.up, dtype=np.float64)
        up = up - np.dot(up, forward) * forward
        up = _unit(up, "camera: up parallel to view direction")
        object.__setattr__(self, "eye", tuple(map(float, eye)))
        object.__setattr__(self, "at", tuple(map(float, at)))
        object.__setattr__(self, "up", tuple(map(float, up)))

    def distance(self) -> float:
        return float(np.linalg.norm(np.subtract(self.eye, self.at)))


DEFAULT_CAMERA = Camera(eye=(0.0, 0.0, 5.0), at=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0))


def _sphere_point(x: float, y: float) -> np.ndarray:
    """Project a point in [-1, 1]^2 onto the unit ball surface."""
    z2 = 1.0 - x * x - y * y
    v = np.array([x, y, math.sqrt(z2) if z2 > 0.0 else 0.0])
    return _unit(v, "arcball point at origin") if np.linalg.norm(v) > 1e-12 else np.array([0.0, 0.0, 1.0])


def _rotate(v: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    # Rodrigues rotation about a unit axis.
    c, s = math.cos(angle), math.sin(angle)
    return v * c + np.cross(axis, v) * s + axis * np.dot(axis, v) * (1.0 - c)


def arcball(cam: Camera, p0: tuple[float, float], p1: tuple[float, float]) -> Camera:
    """Orbit around ``at`` from a drag between two normalized screen points.

    Screen points map onto a unit sphere; the scene would rotate by the angle
    between both projections, so the camera moves by the inverse rotation.
    A zero-length drag (or antipodal degeneracy) leaves the camera in place.
    """
    v0 = _sphere_point(*p0)
    v1 = _sphere_point(*p1)
    axis = np.cross(v0, v1)
    norm = float(np.linalg.norm(axis))
    if norm < 1e-12:
        return cam
    axis /= norm
    angle = math.acos(max(-1.0, min(1.0, float(np.dot(v0, v1)))))
    at = np.asarray(cam.at)
    offset = np.asarray(cam.eye) - at
    eye = at + _rotate(offset, axis, -angle)
    up = _rotate(np.asarray(cam.up), axis, -angle)
    return Camera(eye=tuple(eye), at=cam.at, up=tuple(up))


def pan(cam: Camera, dx: float, dy: float) -> Camera:
    """Slide eye and target together in the view plane, scaled by distance."""
    eye = np.asarray(cam.eye)
    at = np.asarray(cam.at)
    up = np.asarray(cam.up)
    forward = _unit(at - eye, "camera view")
    right = _unit(np.cross(forward, up), "camera right")
    offset = (dx * right + dy * up) * cam.distance()
    return Camera(eye=tuple(eye + offset), at=tuple(at + offset), up=cam.up)


def zoom(cam: Camera, factor: float) -> Camera:
    """Move the eye toward (factor > 1) or away from the target."""
    if not factor > 0.0:
        raise NonPositiveFactor(f"zoom factor must be positive, got {factor}")
    eye = np.asarray(cam.at) + (np.asarray(cam.eye) - np.asarray(cam.at)) / factor
    return Camera(eye=tuple(eye), at=cam.at, up=cam.up)


def camera_to_params(cam: Camera) -> dict[str, Vec3]:
    return {CAMERA_EYE: cam.eye, CAMERA_AT: cam.at, CAMERA_UP: cam.up}


def camera_from_params(values: Mapping[str, ParamValue]) -> Camera | None:
    """Rebuild a camera when all three reserved vectors are present."""
    if not all(name in values and is_vec3_value(values[name]) for name in CAMERA_NAMES):
        return None
    return Camera(
        eye=tuple(values[CAMERA_EYE]),  # type: ignore[arg-type]
        at=tuple(values[CAMERA_AT]),    # type: ignore[arg-type]
        up=tuple(values[CAMERA_UP]),    # type: ignore[arg-type]
    )
