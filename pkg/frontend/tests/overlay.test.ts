import { describe, expect, it } from "vitest";

import {
  graspRectOverlay,
  metersToPixels,
  rectCorners,
  svgPoints,
} from "../src/overlay.js";
import type { GraspBest } from "../src/api.js";

const best = (u: number, v: number, rot: number, width: number): GraspBest => ({
  u,
  v,
  rotation_rad: rot,
  width_m: width,
  quality: 0.5,
});

/**
 * Independent corner oracle: span the rectangle with the rotated width
 * and height axis vectors instead of rotating offset pairs.
 */
function cornersFromAxes(
  center: [number, number],
  angle: number,
  width: number,
  height: number,
): [number, number][] {
  const wAxis: [number, number] = [Math.cos(angle), Math.sin(angle)];
  const hAxis: [number, number] = [-Math.sin(angle), Math.cos(angle)];
  const at = (sw: number, sh: number): [number, number] => [
    center[0] + (sw * width * wAxis[0]) / 2 + (sh * height * hAxis[0]) / 2,
    center[1] + (sw * width * wAxis[1]) / 2 + (sh * height * hAxis[1]) / 2,
  ];
  return [at(-1, -1), at(1, -1), at(1, 1), at(-1, 1)];
}

function shoelace(corners: [number, number][]): number {
  let twice = 0;
  for (let i = 0; i < corners.length; i++) {
    const [x0, y0] = corners[i];
    const [x1, y1] = corners[(i + 1) % corners.length];
    twice += x0 * y1 - x1 * y0;
  }
  return twice / 2;
}

describe("pixel conversion", () => {
  it("follows the fixed projection window", () => {
    // 0.45 m across 64 bins: 0.1125 m is exactly 16 px.
    expect(metersToPixels(0.1125, 64, 0.45)).toBeCloseTo(16, 12);
    expect(metersToPixels(0.45, 64, 0.45)).toBeCloseTo(64, 12);
    expect(metersToPixels(0, 64, 0.45)).toBe(0);
  });
});

describe("rectangle corners", () => {
  it("are axis-aligned at zero rotation", () => {
    const corners = rectCorners([10, 20], 0, 8, 4);
    expect(corners).toEqual([
      [6, 18],
      [14, 18],
      [14, 22],
      [6, 22],
    ]);
  });

  it("swap extents at a quarter turn", () => {
    const corners = rectCorners([0, 0], Math.PI / 2, 8, 4);
    const expected = [
      [2, -4],
      [2, 4],
      [-2, 4],
      [-2, -4],
    ];
    corners.forEach(([x, y], i) => {
      expect(x).toBeCloseTo(expected[i][0], 12);
      expect(y).toBeCloseTo(expected[i][1], 12);
    });
  });

  it("matches the rotated-axes oracle at arbitrary angles", () => {
    const cases: [[number, number], number, number, number][] = [
      [[12.5, 31.25], 0.3, 9.0, 4.5],
      [[0, 0], -1.1, 3.2, 1.6],
      [[40, 8], 2.7, 12.0, 2.0],
      [[7.25, 7.75], Math.PI / 6, 5.5, 5.5],
      [[63, 1], -Math.PI / 3, 0.8, 0.1],
    ];
    for (const [center, angle, width, height] of cases) {
      const got = rectCorners(center, angle, width, height);
      const want = cornersFromAxes(center, angle, width, height);
      got.forEach(([x, y], i) => {
        expect(x).toBeCloseTo(want[i][0], 10);
        expect(y).toBeCloseTo(want[i][1], 10);
      });
    }
  });

  it("stay counterclockwise and centered under rotation", () => {
    for (const angle of [0, 0.4, 1.9, -2.8, 3.1]) {
      const corners = rectCorners([5, 9], angle, 6, 2);
      expect(shoelace(corners)).toBeCloseTo(12, 10); // w * h, positive = CCW
      const cx = corners.reduce((a, [x]) => a + x, 0) / 4;
      const cy = corners.reduce((a, [, y]) => a + y, 0) / 4;
      expect(cx).toBeCloseTo(5, 10);
      expect(cy).toBeCloseTo(9, 10);
    }
  });
});

describe("grasp overlay", () => {
  it("scales the reported opening into pixels", () => {
    const overlay = graspRectOverlay(best(30, 12, 0.3, 0.1125), 64, 0.45);
    expect(overlay.center).toEqual([30, 12]);
    expect(overlay.widthPx).toBeCloseTo(16, 12);
    expect(overlay.heightPx).toBeCloseTo(8, 12); // default aspect 0.5
    expect(overlay.angleRad).toBe(0.3);
  });

  it("honors a custom height aspect", () => {
    const overlay = graspRectOverlay(best(0, 0, 0, 0.09), 64, 0.45, 0.25);
    expect(overlay.heightPx).toBeCloseTo(overlay.widthPx * 0.25, 12);
  });

  it("agrees with the corner helper", () => {
    const b = best(22, 41, -0.7, 0.06);
    const overlay = graspRectOverlay(b, 64, 0.45);
    const expected = rectCorners([22, 41], -0.7, overlay.widthPx, overlay.heightPx);
    expect(overlay.corners).toEqual(expected);
  });

  it("prints SVG polygon points with two decimals", () => {
    const overlay = graspRectOverlay(best(10, 20, 0, 0.1125), 64, 0.45);
    expect(svgPoints(overlay)).toBe("2.00,16.00 18.00,16.00 18.00,24.00 2.00,24.00");
  });
});
