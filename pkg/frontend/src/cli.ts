/** Render a figure from a trajectory CSV.
 *
 * Usage:
 *   node dist/src/cli.js phase    traj.csv --out fig.svg --alpha0 1 --xmax 1
 *   node dist/src/cli.js position traj.csv --out fig.svg --cx 0 --cy -10 --r 10.05 [--every 0.2]
 *   node dist/src/cli.js htime    traj.csv --out fig.svg
 *
 * Exit codes: 0 ok, 1 io/usage error, 2 schema or data error.
 */
import { writeFileSync } from "node:fs";

import { SchemaError, loadTrajectory } from "./csv.js";
import { renderHTimeseries, renderPhase, renderPosition } from "./plots.js";

function parseArgs(argv: string[]): { kind: string; csv: string; flags: Map<string, string> } {
  if (argv.length < 2) {
    throw new Error("usage: <phase|position|htime> <trajectory.csv> [--out FILE] [options]");
  }
  const [kind, csv, ...rest] = argv;
  const flags = new Map<string, string>();
  for (let i = 0; i < rest.length; i += 2) {
    const key = rest[i];
    if (!key.startsWith("--") || i + 1 >= rest.length) {
      throw new Error(`bad flag '${key}'`);
    }
    flags.set(key.slice(2), rest[i + 1]);
  }
  return { kind, csv, flags };
}

function num(flags: Map<string, string>, name: string, fallback?: number): number {
  const raw = flags.get(name);
  if (raw === undefined) {
    if (fallback === undefined) throw new Error(`missing required flag --${name}`);
    return fallback;
  }
  const v = Number(raw);
  if (Number.isNaN(v)) throw new Error(`flag --${name} must be a number`);
  return v;
}

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
  const { kind, csv, flags } = parsed;
  try {
    const traj = loadTrajectory(csv);
    let svg: string;
    if (kind === "phase") {
      svg = renderPhase(traj, { alpha0: num(flags, "alpha0", 1.0), xMax: num(flags, "xmax", 1.0) });
    } else if (kind === "position") {
      svg = renderPosition(traj, {
        cx: num(flags, "cx"), cy: num(flags, "cy"), r: num(flags, "r"),
        every: num(flags, "every", 0.2),
      });
    } else if (kind === "htime") {
      svg = renderHTimeseries(traj);
    } else {
      console.error(`unknown plot kind '${kind}' (phase|position|htime)`);
      return 1;
    }
    const out = flags.get("out") ?? csv.replace(/\.csv$/, "") + `_${kind}.svg`;
    writeFileSync(out, svg);
    console.log(`wrote ${out}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(err.message);
      for (const line of err.diff) console.error("  " + line);
      return 2;
    }
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
