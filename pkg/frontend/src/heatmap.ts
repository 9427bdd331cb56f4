/**
 * Depth-grid heatmaps.
 *
 * The service ships each view as a k x k grid of depths with 0 marking
 * empty pixels. The console turns these into color grids; the browser
 * shell only has to paint cells. The color scale is computed once per
 * object over all of its views, so two views of the same object are
 * directly comparable: the same depth is always the same color.
 */

export interface ColorScale {
  lo: number;
  hi: number;
}

/** Cells with no depth sample. */
export const BACKGROUND = "#10141a";

/** Dark (far) to warm (near) ramp stops. */
const STOPS: [number, number, number][] = [
  [0x0b, 0x1e, 0x3d],
  [0x2e, 0x86, 0xab],
  [0xf7, 0xc9, 0x48],
];

function hex(r: number, g: number, b: number): string {
  const to2 = (x: number) => Math.round(x).toString(16).padStart(2, "0");
  return `#${to2(r)}${to2(g)}${to2(b)}`;
}

/** Map nearness t in [0, 1] (1 = nearest) onto the ramp. */
export function shade(t: number): string {
  const u = Math.min(1, Math.max(0, t));
  const [a, b, frac] = u < 0.5 ? [STOPS[0], STOPS[1], u * 2] : [STOPS[1], STOPS[2], (u - 0.5) * 2];
  return hex(
    a[0] + (b[0] - a[0]) * frac,
    a[1] + (b[1] - a[1]) * frac,
    a[2] + (b[2] - a[2]) * frac,
  );
}

/**
 * Depth range over the occupied pixels of all views of one object.
 * Zeros are background, not depth, so they stay out of the range.
 */
export function objectColorScale(views: { grid: number[][] }[]): ColorScale {
  let lo = Infinity;
  let hi = -Infinity;
  for (const view of views) {
    for (const row of view.grid) {
      for (const value of row) {
        if (value > 0) {
          lo = Math.min(lo, value);
          hi = Math.max(hi, value);
        }
      }
    }
  }
  if (!Number.isFinite(lo)) return { lo: 0, hi: 1 };
  return { lo, hi };
}

/** Color every cell of one view under a fixed per-object scale. */
export function heatmapGrid(grid: number[][], scale: ColorScale): string[][] {
  const span = scale.hi - scale.lo;
  return grid.map((row) =>
    row.map((value) => {
      if (value <= 0) return BACKGROUND;
      const t = span > 0 ? 1 - (value - scale.lo) / span : 0.5;
      return shade(t);
    }),
  );
}

/**
 * One flag per view, true exactly for the server's best (highest
 * entropy) view. With a single view that view carries the badge.
 */
export function bestBadges(views: { index: number }[], best: number): boolean[] {
  return views.map((view) => view.index === best);
}
