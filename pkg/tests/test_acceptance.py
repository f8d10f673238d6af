"""Acceptance suite: one test per release criterion, each printing a
[PASS]/[FAIL] line. Runtime criteria are measured on simulation wall time
after a warmup run so one-time JIT compilation is excluded.
"""
import time

import numpy as np
import pytest

from oracle_qp import qp_oracle, random_qp

from obsafe.barriers import AlphaFn, di_barrier, quad_barrier
from obsafe.bounds import Box, bound_a, bound_b
from obsafe.controllers import lqr_nominal
from obsafe.linalg import solve_care
from obsafe.observers import LuenbergerObserver, luenberger_design
from obsafe.qp import QpProblem, kkt_residual, solve_qp
from obsafe.scenarios import builtin_names, builtin_scenario
from obsafe.sim import batch_run, compile_scenario, controller_response, simulate
from obsafe.systems import double_integrator, planar_quadrotor

N_QUAD_SEEDS = 100


def report(name: str, ok: bool, detail: str = "") -> None:
    tag = "PASS" if ok else "FAIL"
    print(f"[{tag}] {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def warmed():
    s = builtin_scenario("di_baseline")
    s.t_final = 0.05
    simulate(s)
    s = builtin_scenario("quad_approach2")
    s.t_final = 0.05
    simulate(s)
    return True


@pytest.fixture(scope="module")
def di_runs(warmed):
    runs = {}
    elapsed = 0.0
    for name in ("di_baseline", "di_approach1", "di_approach2"):
        traj = simulate(builtin_scenario(name))
        runs[name] = traj
        elapsed += traj.wall_time
    runs["elapsed"] = elapsed
    return runs


@pytest.fixture(scope="module")
def quad_runs(warmed):
    t0 = time.perf_counter()
    baseline = simulate(builtin_scenario("quad_baseline"))
    rows = batch_run(
        [builtin_scenario("quad_approach2")], seeds=range(N_QUAD_SEEDS),
        lipschitz_probes=0,
    )
    elapsed = time.perf_counter() - t0
    keep = simulate(builtin_scenario("quad_approach2"))  # seed 0, kept for sampling checks
    return {"baseline": baseline, "rows": rows, "elapsed": elapsed, "seed0": keep}


def test_double_integrator_study(di_runs):
    base = di_runs["di_baseline"]
    a1 = di_runs["di_approach1"]
    a2 = di_runs["di_approach2"]
    ok = (
        base.status == "ok" and base.min_h < 0.0
        and a1.status == "ok" and a1.min_h >= -1e-6
        and a2.status == "ok" and a2.min_h >= -1e-6
        and di_runs["elapsed"] < 5.0
    )
    report(
        "double integrator study: baseline violates, approach 1/2 safe on shared start",
        ok,
        f"min_h base={base.min_h:.4g} a1={a1.min_h:.4g} a2={a2.min_h:.4g} "
        f"wall={di_runs['elapsed']:.2f}s",
    )


def test_quadrotor_study(quad_runs):
    base = quad_runs["baseline"]
    rows = quad_runs["rows"]
    n_safe = sum(
        1
        for r in rows
        if r["status"] == "ok" and r.get("min_dist_sq_minus_r_sq", -1.0) >= -1e-6
    )
    ok = (
        base.meta["min_dist"] < base.meta["radius"]
        and n_safe == N_QUAD_SEEDS
        and quad_runs["elapsed"] < 60.0
    )
    report(
        "quadrotor study: baseline enters obstacle, approach 2 safe on all seeds",
        ok,
        f"baseline min_dist={base.meta['min_dist']:.3f} < r={base.meta['radius']}, "
        f"safe {n_safe}/{N_QUAD_SEEDS}, wall={quad_runs['elapsed']:.1f}s",
    )


def test_observer_bound_soundness(di_runs, quad_runs):
    # every built-in run plus the 100-seed batch: containment at every step
    violations = 0
    checked = 0
    for name in ("di_baseline", "di_approach1", "di_approach2"):
        traj = di_runs[name]
        checked += traj.records
        violations += int(traj.records - traj.containment[: traj.records].sum())
    for name in ("di_approach1_disturbed", "di_approach2_disturbed"):
        for seed in range(5):
            traj = simulate(builtin_scenario(name).replace_seed(seed))
            checked += traj.records
            violations += int(traj.records - traj.containment[: traj.records].sum())
    base = quad_runs["baseline"]
    checked += base.records
    violations += int(base.records - base.containment[: base.records].sum())
    batch_bad = sum(1 for r in quad_runs["rows"] if r["containment_rate"] < 1.0)
    ok = violations == 0 and batch_bad == 0
    report(
        "observer bounds: containment at every logged step",
        ok,
        f"{checked} steps checked, {violations} violations, "
        f"{batch_bad} bad batch members",
    )


def test_qp_solver_oracle_equivalence():
    rng = np.random.default_rng(2024)
    worst_gap = 0.0
    worst_kkt = 0.0
    n_solved = 0
    for _ in range(500):
        H, q, A, b = random_qp(rng)
        problem = QpProblem(H=H, q=q, A_ineq=A, b_ineq=b)
        sol = solve_qp(problem)
        u_ref, _ = qp_oracle(H, q, A, b)
        if u_ref is None:
            assert sol.status == "infeasible"
            continue
        n_solved += 1
        assert sol.status == "optimal"
        worst_gap = max(worst_gap, float(np.linalg.norm(sol.u_star - u_ref)))
        worst_kkt = max(worst_kkt, kkt_residual(problem, sol))
    ok = worst_gap <= 1e-6 and worst_kkt <= 1e-8 and n_solved >= 200
    report(
        "qp solver: 500 random problems match enumeration oracle",
        ok,
        f"max |du|={worst_gap:.2e}, max KKT residual={worst_kkt:.2e}, "
        f"{n_solved} feasible",
    )


def _ball_samples(rng, shape, level, center, k):
    n = len(center)
    z = rng.normal(size=(k, n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    z *= rng.uniform(0.0, 1.0, size=(k, 1)) ** (1.0 / n)
    w, U = np.linalg.eigh(0.5 * (shape + shape.T))
    half = U @ np.diag(np.sqrt(np.maximum(w, 0.0))) @ U.T
    return center + np.sqrt(max(level, 0.0)) * z @ half.T


def _robust_expression_di(barrier, model, X, u, dist_bound=None):
    # d_bar = w_bar = 0 for the undisturbed plant, so no robustness term
    alpha0, x_max = barrier.params[0], barrier.params[1]
    h = -X[:, 1] + alpha0 * (x_max - X[:, 0])
    lf = -alpha0 * X[:, 1]
    lg = -np.ones(len(X))
    gain = barrier.alpha.gain
    alpha_vals = gain * h if barrier.alpha.kind == "linear" else gain * h**3
    return lf + lg * u[0] + alpha_vals


def _robust_expression_quad(barrier, model, X, u, dist_bound=None):
    cx, cy, r, sigma = barrier.params
    mass, inertia, grav = model.params
    db = model.d_bar if dist_bound is None else dist_bound
    d1 = X[:, 0] - cx
    d2 = X[:, 1] - cy
    D = np.hypot(d1, d2)
    S = d1 * X[:, 3] + d2 * X[:, 4]
    h = D - r + sigma * S / D
    lf = S / D + sigma * (X[:, 3] ** 2 + X[:, 4] ** 2 - grav * d2) / D - sigma * S**2 / D**3
    lg1 = (sigma / mass) * (d1 * np.sin(X[:, 2]) + d2 * np.cos(X[:, 2])) / D
    gain = barrier.alpha.gain
    alpha_vals = gain * h if barrier.alpha.kind == "linear" else gain * h**3
    kappa_vals = np.ones(len(X)) if barrier.kappa.kind == "one" else 2.0 / (1.0 + np.exp(h))
    return lf + lg1 * u[0] - kappa_vals * sigma * db + alpha_vals


def test_set_filter_error_set_soundness(di_runs, quad_runs):
    # applied approach-2 inputs must satisfy the robust barrier inequality at
    # sampled points of the error set, thinned to every 100th step
    rng = np.random.default_rng(5)
    worst = np.inf
    checked = 0
    cases = [
        (di_runs["di_approach2"], builtin_scenario("di_approach2"), _robust_expression_di),
        (quad_runs["seed0"], builtin_scenario("quad_approach2"), _robust_expression_quad),
    ]
    for traj, scenario, expr in cases:
        cs = compile_scenario(scenario)
        for k in range(0, traj.records, 100):
            X = _ball_samples(
                rng, traj.bound_shape[k], traj.bound_level_raw[k], traj.xhat[k], 1000
            )
            vals = expr(cs.barrier, cs.model, X, traj.u[k])
            worst = min(worst, float(vals.min()))
            checked += len(X)
    ok = worst >= -1e-9
    report(
        "set-based filter: applied inputs satisfy the robust CBF inequality on the error set",
        ok,
        f"{checked} sampled states, worst margin {worst:.3e}",
    )


def test_certified_bound_soundness(di_runs, quad_runs):
    # certified a and b bounds versus dense sampling over the enclosure box
    rng = np.random.default_rng(11)
    worst_a = np.inf
    worst_b = np.inf
    cases = [
        (di_runs["di_approach2"], builtin_scenario("di_approach2"), _robust_expression_di, True),
        (quad_runs["seed0"], builtin_scenario("quad_approach2"), _robust_expression_quad, False),
    ]
    n_probes = 0
    for traj, scenario, expr, is_di in cases:
        cs = compile_scenario(scenario)
        model, barrier = cs.model, cs.barrier
        for _ in range(50):
            k = int(rng.integers(0, traj.records))
            xhat = traj.xhat[k]
            hw = traj.box_half_widths[k]
            box = Box(lo=xhat - hw, hi=xhat + hw)
            a = bound_a(barrier, model, float(traj.t[k]), xhat, box)
            cb = bound_b(barrier, model, float(traj.t[k]), xhat, box)
            X = rng.uniform(box.lo, box.hi, size=(10_000, model.n))
            # the input-free part of the robust barrier derivative is bounded
            # against the combined disturbance bound w_bar
            vals = expr(barrier, model, X, np.zeros(model.m), dist_bound=model.w_bar)
            worst_a = min(worst_a, float((vals - a).min()))
            if is_di:
                lg = -np.ones(len(X))[:, None]
            else:
                cx, cy, r, sigma = barrier.params
                mass = model.params[0]
                d1 = X[:, 0] - cx
                d2 = X[:, 1] - cy
                D = np.hypot(d1, d2)
                lg1 = (sigma / mass) * (d1 * np.sin(X[:, 2]) + d2 * np.cos(X[:, 2])) / D
                lg = np.stack([lg1, np.zeros(len(X))], axis=1)
            for i in range(model.m):
                worst_b = min(worst_b, float((lg[:, i] - cb.b_minus[i]).min()))
                worst_b = min(worst_b, float((cb.b_plus[i] - lg[:, i]).min()))
            n_probes += 1
    ok = worst_a >= -1e-9 and worst_b >= -1e-9
    report(
        "certified bounds: sampled values never fall outside a or the b intervals",
        ok,
        f"{n_probes} probes, worst a-margin {worst_a:.3e}, worst b-margin {worst_b:.3e}",
    )


def test_lipschitz_probes(di_runs, quad_runs):
    rng = np.random.default_rng(3)
    ok_all = True
    details = []
    for name, traj in (
        ("di_approach1", di_runs["di_approach1"]),
        ("di_approach2", di_runs["di_approach2"]),
        ("quad_approach2", quad_runs["seed0"]),
    ):
        cs = compile_scenario(builtin_scenario(name))
        ratios = []
        while len(ratios) < 1000:
            k = int(rng.integers(0, traj.records))
            t = float(traj.t[k])
            xhat = traj.xhat[k]
            hw = traj.box_half_widths[k]
            u0 = controller_response(cs, t, xhat, traj.y[k], hw)
            d = rng.normal(size=len(xhat))
            d *= 1e-4 / np.linalg.norm(d)
            u1 = controller_response(cs, t, xhat + d, traj.y[k], hw)
            if u0 is None or u1 is None:
                continue
            ratios.append(float(np.linalg.norm(u1 - u0) / 1e-4))
        ratios = np.array(ratios)
        med = float(np.median(ratios))
        peak = float(ratios.max())
        good = peak <= 10.0 * med
        ok_all = ok_all and good
        details.append(f"{name}: max={peak:.3g} median={med:.3g}")
    report("lipschitz probes: controller sensitivity bounded", ok_all, "; ".join(details))


def test_bound_free_condition_consistency():
    # linear alpha with Mdot <= -gain M: inputs meeting the bound-free
    # sufficient condition also satisfy the full margin constraint
    model = double_integrator()
    bar = di_barrier(alpha0=1.0, x_max=1.0, alpha=AlphaFn("linear", 1.0))
    obs = luenberger_design(model, theta=1.5, delta=0.3)
    bound = obs.iss_bound()
    rng = np.random.default_rng(77)
    counterexamples = 0
    for _ in range(1000):
        t = rng.uniform(0.0, 4.0)
        assert bound.Mdot(t) <= -1.0 * bound.M(t) + 1e-12
        xhat = rng.uniform(-2.0, 2.0, size=2)
        y = model.c(xhat) + rng.normal(scale=0.05)
        grad = bar.grad_h(xhat)
        lp = float(grad @ obs.p(xhat, y))
        lq = float((grad @ obs.q(xhat, y)).item())
        u = (-1.0 * bar.h(xhat) - lp + rng.uniform(0.0, 3.0)) / lq
        simplified_ok = lp + lq * u >= -1.0 * bar.h(xhat) - 1e-9
        m_t, mdot_t = bound.M(t), bound.Mdot(t)
        full_rhs = -bar.alpha(bar.h(xhat) - bar.gamma_h * m_t) + bar.gamma_h * mdot_t
        full_ok = lp + lq * u >= full_rhs - 1e-9
        if simplified_ok and not full_ok:
            counterexamples += 1
    ok = counterexamples == 0
    report(
        "bound-free sufficient condition implies the full margin constraint",
        ok,
        f"{counterexamples} counterexamples in 1000 samples",
    )


def test_closed_form_crosschecks():
    gaps = []
    for theta in (1.0, 2.0):
        obs = LuenbergerObserver(
            np.array([[0.0, 1.0], [0.0, 0.0]]),
            np.array([[0.0], [1.0]]),
            np.array([[1.0, 0.0]]),
            theta=theta,
            delta=1.0,
        )
        gaps.append(np.max(np.abs(obs.L.ravel() - [2 * theta, 2 * theta**2])))
    _, K = solve_care(
        np.array([[0.0, 1.0], [0.0, 0.0]]),
        np.array([[0.0], [1.0]]),
        np.eye(2),
        np.array([[1.0]]),
    )
    gaps.append(np.max(np.abs(K.ravel() - [1.0, np.sqrt(3.0)])))
    worst = float(max(gaps))
    ok = worst <= 1e-9
    report(
        "closed forms: observer gain and LQR gain match numerical solvers",
        ok,
        f"worst |gap| = {worst:.2e}",
    )
