/** Trajectory CSV parsing with strict schema validation.
 *
 * Expected header:
 *   t, x_1..x_n, xhat_1..xhat_n, y_1..y_ny, u_1..u_m,
 *   h_x, h_xhat, bound_level, slack, qp_status
 */
import { readFileSync } from "node:fs";

export interface Trajectory {
  columns: string[];
  n: number;
  nY: number;
  m: number;
  t: number[];
  x: number[][];
  xhat: number[][];
  y: number[][];
  u: number[][];
  hX: number[];
  hXhat: number[];
  boundLevel: number[];
  slack: number[];
  qpStatus: number[];
}

export class SchemaError extends Error {
  constructor(message: string, public readonly diff: string[]) {
    super(message);
    this.name = "SchemaError";
  }
}

const TAIL = ["h_x", "h_xhat", "bound_level", "slack", "qp_status"];

function countPrefixed(columns: string[], start: number, prefix: string): number {
  let k = 0;
  while (start + k < columns.length && columns[start + k] === `${prefix}_${k + 1}`) {
    k += 1;
  }
  return k;
}

export function validateHeader(columns: string[]): { n: number; nY: number; m: number } {
  const fail = (why: string): never => {
    const got = columns.join(",");
    throw new SchemaError(`trajectory schema mismatch: ${why}`, [
      `expected: t,x_1..x_n,xhat_1..xhat_n,y_1..y_ny,u_1..u_m,${TAIL.join(",")}`,
      `got:      ${got}`,
    ]);
  };
  if (columns[0] !== "t") fail("first column must be 't'");
  let pos = 1;
  const n = countPrefixed(columns, pos, "x");
  if (n === 0) fail("missing x_1..x_n block");
  pos += n;
  const nHat = countPrefixed(columns, pos, "xhat");
  if (nHat !== n) fail(`xhat block has ${nHat} columns but x block has ${n}`);
  pos += nHat;
  const nY = countPrefixed(columns, pos, "y");
  if (nY === 0) fail("missing y_1..y_ny block");
  pos += nY;
  const m = countPrefixed(columns, pos, "u");
  if (m === 0) fail("missing u_1..u_m block");
  pos += m;
  const tail = columns.slice(pos);
  if (tail.length !== TAIL.length || tail.some((c, i) => c !== TAIL[i])) {
    fail(`trailing columns are [${tail.join(",")}], expected [${TAIL.join(",")}]`);
  }
  return { n, nY, m };
}

export function parseTrajectory(text: string): Trajectory {
  const lines = text.split(/\r?\n/).filter((ln) => ln.trim().length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty file: no header row", []);
  }
  const columns = lines[0].split(",");
  const { n, nY, m } = validateHeader(columns);
  if (lines.length === 1) {
    throw new SchemaError("trajectory has a header but no data rows", []);
  }
  const traj: Trajectory = {
    columns, n, nY, m,
    t: [], x: [], xhat: [], y: [], u: [],
    hX: [], hXhat: [], boundLevel: [], slack: [], qpStatus: [],
  };
  for (let r = 1; r < lines.length; r++) {
    const cells = lines[r].split(",");
    if (cells.length !== columns.length) {
      throw new SchemaError(
        `row ${r} has ${cells.length} cells, header has ${columns.length}`, [],
      );
    }
    const vals = cells.map((c) => Number(c));
    if (vals.some((v) => Number.isNaN(v))) {
      throw new SchemaError(`row ${r} contains a non-numeric cell`, []);
    }
    let pos = 0;
    traj.t.push(vals[pos++]);
    traj.x.push(vals.slice(pos, pos + n)); pos += n;
    traj.xhat.push(vals.slice(pos, pos + n)); pos += n;
    traj.y.push(vals.slice(pos, pos + nY)); pos += nY;
    traj.u.push(vals.slice(pos, pos + m)); pos += m;
    traj.hX.push(vals[pos++]);
    traj.hXhat.push(vals[pos++]);
    traj.boundLevel.push(vals[pos++]);
    traj.slack.push(vals[pos++]);
    traj.qpStatus.push(vals[pos++]);
  }
  return traj;
}

export function loadTrajectory(path: string): Trajectory {
  return parseTrajectory(readFileSync(path, "utf-8"));
}

export function minH(traj: Trajectory): number {
  return Math.min(...traj.hX);
}
