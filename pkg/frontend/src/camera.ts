// Orbit camera math. Must agree with the server's interpretation of the
// reserved cam_eye/cam_at/cam_up parameters: the client computes the new
// triple locally and ships it via params.set, the server never re-derives it.

import { CAMERA_AT, CAMERA_EYE, CAMERA_UP, type ParamValue } from './protocol.js';

export type Vec3 = [number, number, number];

export interface Camera {
  eye: Vec3;
  at: Vec3;
  up: Vec3;
}

export const DEFAULT_CAMERA: Camera = {
  eye: [0, 0, 5],
  at: [0, 0, 0],
  up: [0, 1, 0],
};

const sub = (a: Vec3, b: Vec3): Vec3 => [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
const add = (a: Vec3, b: Vec3): Vec3 => [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
const scale = (a: Vec3, s: number): Vec3 => [a[0] * s, a[1] * s, a[2] * s];
const dot = (a: Vec3, b: Vec3): number => a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
const cross = (a: Vec3, b: Vec3): Vec3 => [
  a[1] * b[2] - a[2] * b[1],
  a[2] * b[0] - a[0] * b[2],
  a[0] * b[1] - a[1] * b[0],
];
const norm = (a: Vec3): number => Math.sqrt(dot(a, a));

function unit(a: Vec3): Vec3 {
  const n = norm(a);
  if (n < 1e-12) throw new Error('degenerate camera vector');
  return scale(a, 1 / n);
}

/** Project a point in [-1, 1]^2 onto the unit ball surface. */
function spherePoint(x: number, y: number): Vec3 {
  const z2 = 1 - x * x - y * y;
  const v: Vec3 = [x, y, z2 > 0 ? Math.sqrt(z2) : 0];
  return norm(v) > 1e-12 ? unit(v) : [0, 0, 1];
}

// Rodrigues rotation about a unit axis.
function rotate(v: Vec3, axis: Vec3, angle: number): Vec3 {
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  return add(
    add(scale(v, c), scale(cross(axis, v), s)),
    scale(axis, dot(axis, v) * (1 - c)),
  );
}

/**
 * Orbit around `at` from a drag between two normalized screen points. The
 * scene would rotate by the angle between the sphere projections, so the
 * camera moves by the inverse rotation. Zero-length (or antipodal) drags
 * return the camera unchanged, by identity.
 */
export function arcball(cam: Camera, p0: [number, number], p1: [number, number]): Camera {
  const v0 = spherePoint(p0[0], p0[1]);
  const v1 = spherePoint(p1[0], p1[1]);
  const axisRaw = cross(v0, v1);
  const n = norm(axisRaw);
  if (n < 1e-12) return cam;
  const axis = scale(axisRaw, 1 / n);
  const angle = Math.acos(Math.max(-1, Math.min(1, dot(v0, v1))));
  const offset = sub(cam.eye, cam.at);
  return {
    eye: add(cam.at, rotate(offset, axis, -angle)),
    at: cam.at,
    up: rotate(cam.up, axis, -angle),
  };
}

/** Slide eye and target together in the view plane, scaled by distance. */
export function pan(cam: Camera, dx: number, dy: number): Camera {
  const forward = unit(sub(cam.at, cam.eye));
  const right = unit(cross(forward, cam.up));
  const dist = norm(sub(cam.eye, cam.at));
  const offset = scale(add(scale(right, dx), scale(cam.up, dy)), dist);
  return { eye: add(cam.eye, offset), at: add(cam.at, offset), up: cam.up };
}

/** Move the eye toward (factor > 1) or away from the target. */
export function zoom(cam: Camera, factor: number): Camera {
  if (!(factor > 0)) throw new Error(`zoom factor must be positive, got ${factor}`);
  return {
    eye: add(cam.at, scale(sub(cam.eye, cam.at), 1 / factor)),
    at: cam.at,
    up: cam.up,
  };
}

export function cameraToParams(cam: Camera): Record<string, ParamValue> {
  return {
    [CAMERA_EYE]: [...cam.eye],
    [CAMERA_AT]: [...cam.at],
    [CAMERA_UP]: [...cam.up],
  };
}

export function cameraFromParams(values: Record<string, ParamValue>): Camera | null {
  const eye = values[CAMERA_EYE];
  const at = values[CAMERA_AT];
  const up = values[CAMERA_UP];
  if (!Array.isArray(eye) || !Array.isArray(at) || !Array.isArray(up)) return null;
  return { eye: [...eye], at: [...at], up: [...up] };
}

export function distance(cam: Camera): number {
  return norm(sub(cam.eye, cam.at));
}
