/**
 * Grasp rectangle overlay geometry.
 *
 * The grasp planner reports its best candidate as (u, v) pixel center,
 * rotation about the view axis, and metric opening width. The overlay
 * is an oriented rectangle in pixel coordinates: width spans the
 * opening direction, height suggests the finger thickness, and the
 * rotation turns the width direction away from the u axis. Corners are
 * listed counterclockwise starting at (-w/2, -h/2).
 */

import type { GraspBest } from "./api.js";

export interface GraspOverlay {
  center: [number, number];
  angleRad: number;
  widthPx: number;
  heightPx: number;
  corners: [number, number][];
}

/** Pixels per meter follows from the fixed projection window. */
export function metersToPixels(meters: number, bins: number, planeSide: number): number {
  return (meters * bins) / planeSide;
}

export function rectCorners(
  center: [number, number],
  angleRad: number,
  width: number,
  height: number,
): [number, number][] {
  const c = Math.cos(angleRad);
  const s = Math.sin(angleRad);
  const offsets: [number, number][] = [
    [-width / 2, -height / 2],
    [width / 2, -height / 2],
    [width / 2, height / 2],
    [-width / 2, height / 2],
  ];
  return offsets.map(([dx, dy]) => [center[0] + c * dx - s * dy, center[1] + s * dx + c * dy]);
}

/**
 * Overlay for the planner's best grasp on a view rendered with `bins`
 * pixels across a `planeSide`-meter window. The rectangle height is a
 * display choice (a fraction of the opening) since the planner does not
 * report finger thickness.
 */
export function graspRectOverlay(
  best: GraspBest,
  bins: number,
  planeSide: number,
  aspect = 0.5,
): GraspOverlay {
  const widthPx = metersToPixels(best.width_m, bins, planeSide);
  const heightPx = widthPx * aspect;
  const center: [number, number] = [best.u, best.v];
  return {
    center,
    angleRad: best.rotation_rad,
    widthPx,
    heightPx,
    corners: rectCorners(center, best.rotation_rad, widthPx, heightPx),
  };
}

/** Corner list as an SVG polygon `points` attribute. */
export function svgPoints(overlay: GraspOverlay): string {
  return overlay.corners.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
}
