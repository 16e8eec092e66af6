import { describe, expect, it } from 'vitest';
import {
  arcball,
  cameraFromParams,
  cameraToParams,
  distance,
  pan,
  zoom,
  DEFAULT_CAMERA,
  type Camera,
} from '../src/camera.js';
import { CAMERA_AT, CAMERA_EYE, CAMERA_UP } from '../src/protocol.js';

// deterministic LCG so failures reproduce
function makeRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

describe('arcball', () => {
  it('keeps the orbit radius over chained random drags', () => {
    const rng = makeRng(7);
    let cam: Camera = { eye: [1, 2, 3], at: [0.5, -0.25, 0], up: [0, 1, 0] };
    const radius = distance(cam);
    for (let i = 0; i < 1000; i++) {
      const p0: [number, number] = [rng() * 1.6 - 0.8, rng() * 1.6 - 0.8];
      const p1: [number, number] = [rng() * 1.6 - 0.8, rng() * 1.6 - 0.8];
      cam = arcball(cam, p0, p1);
      expect(Math.abs(distance(cam) - radius)).toBeLessThan(1e-9);
    }
  });

  it('returns the identical object for a zero-length drag', () => {
    const cam: Camera = { ...DEFAULT_CAMERA };
    expect(arcball(cam, [0.3, -0.2], [0.3, -0.2])).toBe(cam);
  });

  it('quarter turn moves the eye onto the drag axis', () => {
    // drag from sphere center to its right edge: v0=(0,0,1), v1=(1,0,0),
    // axis -y, angle 90deg; the camera at (0,0,5) orbits to (-5,0,0)
    const cam = arcball(DEFAULT_CAMERA, [0, 0], [1, 0]);
    expect(cam.eye[0]).toBeCloseTo(-5, 9);
    expect(cam.eye[1]).toBeCloseTo(0, 9);
    expect(cam.eye[2]).toBeCloseTo(0, 9);
    expect(cam.up).toEqual([0, 1, 0]);
  });
});

describe('pan and zoom', () => {
  it('pan slides eye and target together', () => {
    const cam = pan(DEFAULT_CAMERA, 0.1, -0.2);
    const shift = [
      cam.eye[0] - DEFAULT_CAMERA.eye[0],
      cam.eye[1] - DEFAULT_CAMERA.eye[1],
      cam.eye[2] - DEFAULT_CAMERA.eye[2],
    ];
    expect(cam.at[0] - DEFAULT_CAMERA.at[0]).toBeCloseTo(shift[0], 12);
    expect(cam.at[1] - DEFAULT_CAMERA.at[1]).toBeCloseTo(shift[1], 12);
    expect(cam.at[2] - DEFAULT_CAMERA.at[2]).toBeCloseTo(shift[2], 12);
    expect(distance(cam)).toBeCloseTo(distance(DEFAULT_CAMERA), 12);
  });

  it('zoom scales the distance by 1/factor and rejects nonpositive factors', () => {
    expect(distance(zoom(DEFAULT_CAMERA, 2))).toBeCloseTo(2.5, 12);
    expect(distance(zoom(DEFAULT_CAMERA, 0.5))).toBeCloseTo(10, 12);
    expect(() => zoom(DEFAULT_CAMERA, 0)).toThrow();
    expect(() => zoom(DEFAULT_CAMERA, -1)).toThrow();
  });
});

describe('camera params', () => {
  it('uses exactly the reserved names', () => {
    const values = cameraToParams(DEFAULT_CAMERA);
    expect(Object.keys(values).sort()).toEqual(
      [CAMERA_AT, CAMERA_EYE, CAMERA_UP].sort(),
    );
    expect(values[CAMERA_EYE]).toEqual([0, 0, 5]);
  });

  it('round trips through a params record', () => {
    const cam: Camera = { eye: [1, 2, 3], at: [0, 0, 1], up: [0, 1, 0] };
    expect(cameraFromParams(cameraToParams(cam))).toEqual(cam);
    expect(cameraFromParams({ other: 1 })).toBeNull();
  });
});
