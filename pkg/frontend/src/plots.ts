/** The three figure kinds rendered from a trajectory log:
 *  - phase: state-plane trajectory with the safe-set boundary line
 *  - position: x-y path with the obstacle disk and uncertainty circles
 *  - htime: safety value over time with the h = 0 line
 */
import { Trajectory } from "./csv.js";
import { Svg, drawFrame, makeMapper } from "./svg.js";

const W = 640;
const H = 480;
const MARGIN = 56;

const TRUE_COLOR = "#0b5394";
const EST_COLOR = "#e06666";
const BOUND_COLOR = "#999999";
const OBSTACLE_COLOR = "#b45f06";

function extent(values: number[], pad = 0.1): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  const span = hi - lo || 1;
  lo -= pad * span;
  hi += pad * span;
  return [lo, hi];
}

export interface PhaseOptions {
  alpha0: number;
  xMax: number;
}

/** Velocity-vs-position plane; the line x2 = alpha0 (xMax - x1) bounds the
 *  safe set from above. */
export function renderPhase(traj: Trajectory, opts: PhaseOptions): string {
  const x1 = traj.x.map((r) => r[0]);
  const x2 = traj.x.map((r) => r[1]);
  const e1 = traj.xhat.map((r) => r[0]);
  const e2 = traj.xhat.map((r) => r[1]);
  const [xmin, xmax] = extent(x1.concat(e1, [opts.xMax]));
  const [ymin, ymax] = extent(x2.concat(e2, [0]));
  const svg = new Svg(W, H);
  const mp = makeMapper(xmin, xmax, ymin, ymax, W, H, MARGIN);
  drawFrame(svg, mp, xmin, xmax, ymin, ymax, "x1", "x2");
  const bLine: Array<[number, number]> = [
    [mp.sx(xmin), mp.sy(opts.alpha0 * (opts.xMax - xmin))],
    [mp.sx(xmax), mp.sy(opts.alpha0 * (opts.xMax - xmax))],
  ];
  svg.polyline(bLine, OBSTACLE_COLOR, 1.5, "6,4");
  svg.text(bLine[1][0] - 110, bLine[1][1] - 6, "h = 0 boundary", 11, OBSTACLE_COLOR);
  svg.polyline(traj.x.map((r) => [mp.sx(r[0]), mp.sy(r[1])]), TRUE_COLOR, 1.8);
  svg.polyline(traj.xhat.map((r) => [mp.sx(r[0]), mp.sy(r[1])]), EST_COLOR, 1.2, "3,3");
  svg.circle(mp.sx(x1[0]), mp.sy(x2[0]), 4, TRUE_COLOR, TRUE_COLOR);
  svg.text(MARGIN, 20, "true state", 11, TRUE_COLOR);
  svg.text(MARGIN + 90, 20, "estimate", 11, EST_COLOR);
  return svg.toString();
}

export interface PositionOptions {
  cx: number;
  cy: number;
  r: number;
  /** seconds between uncertainty-circle snapshots */
  every: number;
}

/** x-y path with the obstacle disk; grey circles show the certified
 *  position-uncertainty radius around the estimate every `every` seconds. */
export function renderPosition(traj: Trajectory, opts: PositionOptions): string {
  if (traj.n < 2) {
    throw new Error("position plot needs at least two state dimensions");
  }
  const px = traj.x.map((r) => r[0]);
  const py = traj.x.map((r) => r[1]);
  const [xmin, xmax] = extent(px.concat([opts.cx - opts.r, opts.cx + opts.r]));
  const [ymin, ymax] = extent(py.concat([opts.cy - opts.r, opts.cy + opts.r]), 0.15);
  const svg = new Svg(W, H);
  const mp = makeMapper(xmin, xmax, ymin, ymax, W, H, MARGIN);
  drawFrame(svg, mp, xmin, xmax, ymin, ymax, "x1 [m]", "x2 [m]");
  // pixel scale for world-radius circles (use the x axis scale)
  const pxPerUnit = Math.abs(mp.sx(1) - mp.sx(0));
  svg.circle(mp.sx(opts.cx), mp.sy(opts.cy), opts.r * pxPerUnit, OBSTACLE_COLOR, "#f6e3c5", 1.5);
  let nextSnap = traj.t[0];
  for (let k = 0; k < traj.t.length; k++) {
    if (traj.t[k] + 1e-12 >= nextSnap) {
      svg.circle(
        mp.sx(traj.xhat[k][0]), mp.sy(traj.xhat[k][1]),
        traj.boundLevel[k] * pxPerUnit, BOUND_COLOR, "none", 0.8,
      );
      nextSnap += opts.every;
    }
  }
  svg.polyline(traj.x.map((r) => [mp.sx(r[0]), mp.sy(r[1])]), TRUE_COLOR, 1.8);
  svg.polyline(traj.xhat.map((r) => [mp.sx(r[0]), mp.sy(r[1])]), EST_COLOR, 1.2, "3,3");
  svg.circle(mp.sx(px[0]), mp.sy(py[0]), 4, TRUE_COLOR, TRUE_COLOR);
  svg.text(MARGIN, 20, "true path", 11, TRUE_COLOR);
  svg.text(MARGIN + 90, 20, "estimate", 11, EST_COLOR);
  svg.text(MARGIN + 180, 20, "uncertainty", 11, BOUND_COLOR);
  return svg.toString();
}

/** Safety value h over time, with the h = 0 line drawn. */
export function renderHTimeseries(traj: Trajectory): string {
  const [tmin, tmax] = [traj.t[0], traj.t[traj.t.length - 1]];
  const [hmin, hmax] = extent(traj.hX.concat(traj.hXhat, [0]));
  const svg = new Svg(W, H);
  const mp = makeMapper(tmin, tmax, hmin, hmax, W, H, MARGIN);
  drawFrame(svg, mp, tmin, tmax, hmin, hmax, "t [s]", "h");
  svg.line(mp.sx(tmin), mp.sy(0), mp.sx(tmax), mp.sy(0), OBSTACLE_COLOR, 1.5, "6,4");
  svg.text(mp.sx(tmax) - 40, mp.sy(0) - 6, "h = 0", 11, OBSTACLE_COLOR);
  svg.polyline(traj.t.map((t, k) => [mp.sx(t), mp.sy(traj.hX[k])]), TRUE_COLOR, 1.8);
  svg.polyline(traj.t.map((t, k) => [mp.sx(t), mp.sy(traj.hXhat[k])]), EST_COLOR, 1.2, "3,3");
  svg.text(MARGIN, 20, "h(x)", 11, TRUE_COLOR);
  svg.text(MARGIN + 60, 20, "h(estimate)", 11, EST_COLOR);
  return svg.toString();
}
