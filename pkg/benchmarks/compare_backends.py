#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

The backend is fixed at import time by OBSAFE_JIT, so each configuration
runs in its own subprocess. JIT timings exclude compilation: a warmup run
precedes the clock.

Usage:
    python3 benchmarks/compare_backends.py [--t-final 2.0] [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json
import sys
import time
from obsafe.scenarios import builtin_scenario
from obsafe.sim import simulate
from obsafe import NUMBA_ENABLED

t_final = float(sys.argv[1])
repeat = int(sys.argv[2])

results = {"numba": NUMBA_ENABLED, "rows": []}
for name in ("di_approach2", "quad_approach2"):
    warm = builtin_scenario(name)
    warm.t_final = min(0.05, t_final)
    simulate(warm)
    s = builtin_scenario(name)
    s.t_final = t_final
    best = float("inf")
    steps = 0
    for _ in range(repeat):
        t0 = time.perf_counter()
        traj = simulate(s)
        best = min(best, time.perf_counter() - t0)
        steps = traj.records - 1
    results["rows"].append({"name": name, "steps": steps, "seconds": best})
print(json.dumps(results))
"""


def run_backend(jit: str, t_final: float, repeat: int) -> dict:
    env = dict(os.environ, OBSAFE_JIT=jit)
    out = subprocess.run(
        [sys.executable, "-c", WORKER, str(t_final), str(repeat)],
        env=env, capture_output=True, text=True, timeout=1800,
    )
    if out.returncode != 0:
        raise RuntimeError(out.stderr)
    return json.loads(out.stdout.splitlines()[-1])


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t-final", type=float, default=2.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    jit = run_backend("1", args.t_final, args.repeat)
    plain = run_backend("0", args.t_final, args.repeat)
    if not jit["numba"]:
        print("numba unavailable: both columns are the numpy path")

    print(f"{'scenario':<16} {'steps':>7} {'numba s':>9} {'numpy s':>9} {'speedup':>8} {'steps/s (numba)':>16}")
    for row_j, row_p in zip(jit["rows"], plain["rows"]):
        speed = row_p["seconds"] / row_j["seconds"] if row_j["seconds"] > 0 else float("inf")
        rate = row_j["steps"] / row_j["seconds"] if row_j["seconds"] > 0 else float("inf")
        print(
            f"{row_j['name']:<16} {row_j['steps']:>7} {row_j['seconds']:>9.3f} "
            f"{row_p['seconds']:>9.3f} {speed:>7.1f}x {rate:>16.0f}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
