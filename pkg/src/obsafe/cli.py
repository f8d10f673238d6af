"""Command-line front end: run scenarios, emit CSV trajectories and summaries.

Exit codes: 0 success; 1 runtime failure (or, with --strict, a safety
assertion failure); 2 scenario parse/validation error.
"""
import argparse
import os
import sys

from .errors import ObsafeError, ScenarioError
from .scenarios import (
    BUILTIN_BUILDERS,
    Scenario,
    builtin_scenario,
    dumps_scenario,
    load_scenario,
)
from .sim import batch_run, simulate

CSV_SCHEMA = (
    "t, x_1..x_n, xhat_1..xhat_n, y_1..y_ny, u_1..u_m, "
    "h_x, h_xhat, bound_level, slack, qp_status"
)

DESCRIPTIONS = {
    "di_baseline": "double integrator, estimate-fed CBF-QP: violates safety",
    "di_approach1": "double integrator, margin-based observer-robust QP: safe",
    "di_approach2": "double integrator, set-based bounded-error QP: safe",
    "di_approach1_disturbed": "double integrator with matched disturbance and measurement noise, margin-based QP",
    "di_approach2_disturbed": "double integrator with matched disturbance and measurement noise, set-based QP",
    "quad_baseline": "planar quadrotor under wind and sensor noise, estimate-fed CBF-QP: enters the obstacle",
    "quad_approach2": "planar quadrotor under wind and sensor noise, set-based QP: avoids the obstacle",
}


def _resolve_scenario(ref: str) -> Scenario:
    if ref in BUILTIN_BUILDERS:
        return builtin_scenario(ref)
    if os.path.exists(ref):
        return load_scenario(ref)
    raise ScenarioError(f"'{ref}' is neither a built-in scenario nor a file")


def _safety_ok(row_or_traj) -> bool:
    if isinstance(row_or_traj, dict):
        return (
            row_or_traj["status"] == "ok"
            and row_or_traj["min_h"] >= -1e-6
            and row_or_traj["containment_rate"] >= 1.0
        )
    t = row_or_traj
    return t.status == "ok" and t.min_h >= -1e-6 and t.containment_rate >= 1.0


def cmd_run(args) -> int:
    try:
        scenario = _resolve_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        scenario = scenario.replace_seed(args.seed)
    if args.dt is not None:
        scenario = scenario.replace_dt(args.dt)

    out_dir = args.out or os.environ.get("OBSAFE_OUT", ".")
    os.makedirs(out_dir, exist_ok=True)

    if args.batch:
        seeds = list(range(scenario.seed, scenario.seed + args.batch))
        rows = batch_run([scenario], seeds=seeds)
        path = os.path.join(out_dir, "batch_summary.csv")
        cols = ["name", "seed", "status", "min_h", "containment_rate",
                "max_lipschitz_probe", "runtime_s"]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(cols) + "\n")
            for row in rows:
                fh.write(",".join(str(row.get(c, "")) for c in cols) + "\n")
        print(f"{'seed':>6} {'status':<12} {'min_h':>12} {'contain':>8} {'wall_s':>7}")
        for row in rows:
            print(f"{row['seed']:>6} {row['status']:<12} {row['min_h']:>12.6g} "
                  f"{row['containment_rate']:>8.4f} {row['runtime_s']:>7.2f}")
        print(f"wrote {path}")
        if args.strict and not all(_safety_ok(r) for r in rows):
            return 1
        return 0

    try:
        traj = simulate(scenario)
    except ObsafeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    csv_path = os.path.join(out_dir, "trajectory.csv")
    traj.to_csv(csv_path)
    summary = traj.summary_text()
    with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(summary)
    print(summary, end="")
    print(f"wrote {csv_path}")
    if traj.status != "ok":
        return 1
    if args.strict and not _safety_ok(traj):
        return 1
    return 0


def cmd_list(_args) -> int:
    print(f"{'name':<24} description")
    for name in BUILTIN_BUILDERS:
        print(f"{name:<24} {DESCRIPTIONS.get(name, '')}")
    return 0


def cmd_show(args) -> int:
    try:
        scenario = _resolve_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(dumps_scenario(scenario), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obsafe",
        description="Observer-aware CBF safety filters: closed-loop studies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario (built-in name or TOML file)")
    run.add_argument("scenario", help="built-in scenario name or path to a scenario file")
    run.add_argument("--out", help="output directory (default $OBSAFE_OUT or .)")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--dt", type=float, help="override the integration step")
    run.add_argument("--strict", action="store_true",
                     help="exit nonzero if any safety assertion failed")
    run.add_argument("--batch", type=int, metavar="N",
                     help="run N consecutive seeds and write batch_summary.csv")
    run.set_defaults(fn=cmd_run)

    lst = sub.add_parser("list", help="list built-in scenarios")
    lst.set_defaults(fn=cmd_list)

    show = sub.add_parser("show", help="print a scenario as a TOML document")
    show.add_argument("scenario", help="built-in scenario name or path")
    show.set_defaults(fn=cmd_show)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
