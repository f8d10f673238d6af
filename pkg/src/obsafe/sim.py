"""Closed-loop simulation: plant + observer + safety filter.

Plant and observer are integrated jointly with fixed-step RK4; the control
input is recomputed once per step and held over it, while disturbances and
measurements are evaluated continuously inside the RK4 stages. Per-step
containment checks are logged, never thrown; only a loss of positive
definiteness in the DEKF covariance aborts a run.
"""
import time
from dataclasses import dataclass, field

import numpy as np

from ._jit import maybe_njit
from .barriers import AlphaFn, Barrier, KappaFn, barrier_h, di_barrier, quad_barrier
from .controllers import (
    CTRL_APPROACH1,
    CTRL_APPROACH2,
    CTRL_BASELINE,
    ControllerSpec,
    a2_filter_kernel,
    baseline_qp_kernel,
    check_safe_start_be,
    check_safe_start_iss,
    lqr_nominal,
    observer_cbf_qp_kernel,
)
from .errors import ScenarioError, UnsafeStartError
from .observers import (
    OBS_DEKF,
    OBS_LUENBERGER,
    DekfObserver,
    LuenbergerObserver,
    dekf_rhs,
    luenberger_design,
    spd_check,
)
from .scenarios import Scenario
from .systems import (
    SystemModel,
    dist_eval,
    double_integrator,
    make_disturbance,
    model_f,
    model_g,
    planar_quadrotor,
)

STATUS_NAMES = {
    0: "ok",
    1: "qp_infeasible",
    2: "qp_max_iterations",
    3: "channel_sign_violated",
    4: "observer_spd_failure",
    5: "observer_p_band_violated",
    6: "barrier_singular",
}

_CTRL_CODES = {"baseline": CTRL_BASELINE, "approach1": CTRL_APPROACH1, "approach2": CTRL_APPROACH2}


@dataclass
class Trajectory:
    """Time-indexed closed-loop log with per-step safety bookkeeping."""

    scenario_name: str
    t: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    y: np.ndarray
    u: np.ndarray
    h_x: np.ndarray
    h_xhat: np.ndarray
    bound_level: np.ndarray  # CSV column: M(t) for ISS runs, box circumradius for BE runs
    bound_level_raw: np.ndarray  # raw containment level (lam_max r^2 or V)
    box_half_widths: np.ndarray
    slack: np.ndarray
    qp_status: np.ndarray
    containment: np.ndarray
    err_norm: np.ndarray
    p_eigs: np.ndarray
    bound_shape: np.ndarray
    status: str
    records: int
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def min_h(self) -> float:
        if self.records == 0:
            return float("nan")
        return float(self.h_x[: self.records].min())

    @property
    def containment_rate(self) -> float:
        if self.records == 0:
            return 0.0
        return float(np.mean(self.containment[: self.records]))

    def csv_header(self, n: int, n_y: int, m: int) -> str:
        cols = ["t"]
        cols += [f"x_{i + 1}" for i in range(n)]
        cols += [f"xhat_{i + 1}" for i in range(n)]
        cols += [f"y_{i + 1}" for i in range(n_y)]
        cols += [f"u_{i + 1}" for i in range(m)]
        cols += ["h_x", "h_xhat", "bound_level", "slack", "qp_status"]
        return ",".join(cols)

    def to_csv(self, path) -> None:
        r = self.records
        n = self.x.shape[1]
        n_y = self.y.shape[1]
        m = self.u.shape[1]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.csv_header(n, n_y, m) + "\n")
            for k in range(r):
                row = [repr(float(self.t[k]))]
                row += [repr(float(v)) for v in self.x[k]]
                row += [repr(float(v)) for v in self.xhat[k]]
                row += [repr(float(v)) for v in self.y[k]]
                row += [repr(float(v)) for v in self.u[k]]
                row += [
                    repr(float(self.h_x[k])),
                    repr(float(self.h_xhat[k])),
                    repr(float(self.bound_level[k])),
                    repr(float(self.slack[k])),
                    str(int(self.qp_status[k])),
                ]
                fh.write(",".join(row) + "\n")

    def summary_text(self) -> str:
        lines = [
            f"scenario: {self.scenario_name}",
            f"status: {self.status}",
            f"records: {self.records}",
            f"min_h: {self.min_h:.9g}",
            f"containment_rate: {self.containment_rate:.6f}",
            f"wall_time_s: {self.wall_time:.3f}",
        ]
        if "min_dist_sq" in self.meta:
            lines.append(f"min_dist_sq_minus_r_sq: {self.meta['min_dist_sq']:.9g}")
        return "\n".join(lines) + "\n"


@dataclass
class CompiledScenario:
    """Scenario resolved into models, kernels arguments, and observer designs."""

    scenario: Scenario
    model: SystemModel
    barrier: Barrier
    observer: object
    nominal: object
    controller: ControllerSpec
    d_sig: object
    v_sig: object
    x0: np.ndarray
    xhat0: np.ndarray
    obs_code: int = 0
    # luenberger params (identity-shaped dummies for DEKF runs)
    A_obs: np.ndarray = None
    B_obs: np.ndarray = None
    L_obs: np.ndarray = None
    P_luen: np.ndarray = None
    Pinv_luen: np.ndarray = None
    theta: float = 1.0
    delta: float = 0.0
    omega_bar: float = 0.0
    lam_max: float = 1.0
    cond_sqrt: float = 1.0
    # dekf params
    Qd: np.ndarray = None
    Rinv: np.ndarray = None
    P0: np.ndarray = None
    V0: float = 0.0
    p_lo: float = 0.0
    p_hi: float = np.inf

    @property
    def ctrl_code(self) -> int:
        return self.controller.code

    @property
    def robust_d_bar(self) -> float:
        return self.controller.robust_d_bar

    @property
    def qp_cap(self) -> int:
        return self.controller.qp_iteration_cap


def _build_model(cfg: dict) -> SystemModel:
    cfg = dict(cfg)
    model_id = cfg.pop("id")
    if model_id == "double_integrator":
        return double_integrator(**cfg)
    if model_id == "planar_quadrotor":
        return planar_quadrotor(**cfg)
    raise ScenarioError(f"unknown model id '{model_id}'")


def _build_barrier(cfg: dict, model: SystemModel) -> Barrier:
    cfg = dict(cfg)
    barrier_id = cfg.pop("id")
    alpha = AlphaFn(cfg.pop("alpha", "linear"), cfg.pop("alpha_gain", 1.0))
    kappa = KappaFn(cfg.pop("kappa", "one"))
    if barrier_id == "di_ceiling":
        return di_barrier(alpha0=cfg.pop("alpha0", 1.0), x_max=cfg.pop("x_max", 1.0),
                          alpha=alpha, kappa=kappa)
    if barrier_id == "quad_obstacle":
        return quad_barrier(
            center=cfg.pop("center", [0.0, 0.0]), r=cfg.pop("radius", 1.0),
            sigma=cfg.pop("sigma", 0.5), alpha=alpha, kappa=kappa,
            box_lo=model.box_lo, box_hi=model.box_hi,
        )
    raise ScenarioError(f"unknown barrier id '{barrier_id}'")


def compile_scenario(s: Scenario) -> CompiledScenario:
    model = _build_model(s.model)
    barrier = _build_barrier(s.barrier, model)
    if barrier.n != model.n:
        raise ScenarioError("barrier and model dimensions do not match")

    x0 = np.asarray(s.init["x0"], float)
    xhat0 = np.asarray(s.init["xhat0"], float)
    if x0.shape != (model.n,) or xhat0.shape != (model.n,):
        raise ScenarioError("init.x0 / init.xhat0 have the wrong dimension")

    obs_kind = s.observer["kind"]
    ctrl_kind = s.controller["kind"]
    if ctrl_kind == "approach1" and obs_kind != "luenberger":
        raise ScenarioError("approach1 requires an ISS (luenberger) observer")
    if obs_kind == "luenberger" and model.code != 0:
        raise ScenarioError("the luenberger design applies to the linear plant only")

    nom = s.nominal
    if model.code == 0:
        u_eq = np.zeros(1)
        x_eq = np.zeros(2)
    else:
        u_eq = np.array([model.params[0] * model.params[2], 0.0])
        x_eq = np.zeros(6)
    x_ref = np.asarray(nom.get("x_ref", x_eq), float)
    nominal = lqr_nominal(model, x_eq, u_eq, np.diag(nom["q_diag"]), np.diag(nom["r_diag"]),
                          x_ref=x_ref)

    horizon = s.t_final + 1.0
    seeds = np.random.SeedSequence(s.seed).generate_state(2)
    d_spec = dict(s.disturbance_d)
    v_spec = dict(s.disturbance_v)
    d_sig = make_disturbance(d_spec.pop("kind", "zero"), model.n_d, model.d_bar,
                             seed=int(seeds[0]), horizon=horizon, **d_spec)
    v_sig = make_disturbance(v_spec.pop("kind", "zero"), model.n_v, model.v_bar,
                             seed=int(seeds[1]), horizon=horizon, **v_spec)

    ctrl_spec = ControllerSpec(
        kind=ctrl_kind, nominal=nominal, barrier=barrier, model=model,
        qp_iteration_cap=int(s.controller.get("qp_iteration_cap", 100)),
        robust_d_bar=float(s.controller.get("robust_d_bar", 0.0)),
    )
    cs = CompiledScenario(
        scenario=s, model=model, barrier=barrier, observer=None, nominal=nominal,
        controller=ctrl_spec, d_sig=d_sig, v_sig=v_sig, x0=x0, xhat0=xhat0,
    )
    n = model.n
    cs.A_obs = np.zeros((n, n))
    cs.B_obs = np.zeros((n, model.m))
    cs.L_obs = np.zeros((n, model.n_y))
    cs.P_luen = np.eye(n)
    cs.Pinv_luen = np.eye(n)
    cs.Qd = np.eye(n)
    cs.Rinv = np.eye(model.n_y)
    cs.P0 = np.eye(n)

    if obs_kind == "luenberger":
        obs = luenberger_design(model, theta=float(s.observer.get("theta", 1.0)),
                                delta=float(s.observer.get("delta", 1.0)), xhat0=xhat0)
        cs.observer = obs
        cs.obs_code = OBS_LUENBERGER
        cs.A_obs, cs.B_obs, cs.L_obs = obs.A, obs.B, obs.L
        cs.P_luen, cs.Pinv_luen = obs.P, obs.Pinv
        cs.theta, cs.delta = obs.theta, obs.delta
        cs.omega_bar = obs.omega_bar
        cs.lam_max, cs.cond_sqrt = obs.lam_max, obs.cond_sqrt
        if np.linalg.norm(x0 - xhat0) > obs.delta + 1e-12:
            raise UnsafeStartError("x(0) outside the initial error set D(xhat0)")
        if cs.ctrl_code == CTRL_APPROACH1:
            check_safe_start_iss(barrier, obs.iss_bound(), xhat0)
        if cs.ctrl_code == CTRL_APPROACH2:
            check_safe_start_be(barrier, obs.current_bound(0.0))
    else:
        o = s.observer
        Q = np.diag(o.get("q_diag", [1.0] * n))
        R = np.diag(o.get("r_diag", [1.0] * model.n_y))
        P0 = np.diag(o.get("p0_diag", [1.0] * n))
        V0 = float(o.get("v0", 1.0))
        obs = DekfObserver(model, Q, R, float(o.get("theta", 0.5)), P0, V0,
                           xhat0=xhat0, p_lo=float(o.get("p_lo", 1e-10)),
                           p_hi=float(o.get("p_hi", 1e8)))
        cs.observer = obs
        cs.obs_code = OBS_DEKF
        cs.theta = obs.theta
        cs.Qd, cs.Rinv, cs.P0, cs.V0 = obs.Q, obs.Rinv, obs.P.copy(), obs.V
        cs.p_lo, cs.p_hi = obs.p_lo, obs.p_hi
        e0 = x0 - xhat0
        if float(e0 @ np.linalg.solve(cs.P0, e0)) > cs.V0 + 1e-12:
            raise UnsafeStartError("x(0) outside the initial error set D(xhat0)")
        if cs.ctrl_code == CTRL_APPROACH2:
            check_safe_start_be(barrier, obs.current_bound(0.0))
    return cs


def simulate(s: Scenario) -> Trajectory:
    """Run a scenario to completion (or truncation) and return the log."""
    cs = compile_scenario(s)
    model, barrier = cs.model, cs.barrier
    n, m, n_y = model.n, model.m, model.n_y
    n_steps = int(np.floor(s.t_final / s.dt + 1e-9))
    rec = n_steps + 1

    T = np.zeros(rec)
    X = np.zeros((rec, n))
    XH = np.zeros((rec, n))
    Y = np.zeros((rec, n_y))
    U = np.zeros((rec, m))
    HX = np.zeros(rec)
    HXH = np.zeros(rec)
    LEV = np.zeros(rec)
    RAW = np.zeros(rec)
    HW = np.zeros((rec, n))
    SLK = np.zeros(rec)
    QPS = np.zeros(rec, np.int64)
    CON = np.zeros(rec, np.bool_)
    ERR = np.zeros(rec)
    PEIG = np.zeros((rec, 2))
    SHP = np.zeros((rec, n, n))

    t0 = time.perf_counter()
    status, records = sim_loop_kernel(
        n_steps, float(s.dt),
        model.code, model.params, model.g_d, model.c_d, model.C,
        model.d_bar, model.v_bar, model.w_bar,
        barrier.code, barrier.params,
        barrier.alpha.code, barrier.alpha.gain, barrier.kappa.code, barrier.gamma_h,
        cs.ctrl_code, cs.robust_d_bar, cs.qp_cap,
        cs.obs_code,
        cs.A_obs, cs.B_obs, cs.L_obs, cs.P_luen, cs.Pinv_luen,
        cs.theta, cs.delta, cs.omega_bar, cs.lam_max, cs.cond_sqrt,
        cs.Qd, cs.Rinv, cs.P0, cs.V0, cs.p_lo, cs.p_hi,
        cs.nominal.K, cs.nominal.u_eq, cs.nominal.x_ref,
        cs.d_sig.code, cs.d_sig.direction, cs.d_sig.magnitude, cs.d_sig.frequency,
        cs.d_sig.phase, cs.d_sig.dwell, cs.d_sig.table,
        cs.v_sig.code, cs.v_sig.direction, cs.v_sig.magnitude, cs.v_sig.frequency,
        cs.v_sig.phase, cs.v_sig.dwell, cs.v_sig.table,
        cs.x0, cs.xhat0,
        int(model.plot_axes[0]), int(model.plot_axes[1]),
        T, X, XH, Y, U, HX, HXH, LEV, RAW, HW, SLK, QPS, CON, ERR, PEIG, SHP,
    )
    wall = time.perf_counter() - t0

    traj = Trajectory(
        scenario_name=s.name,
        t=T, x=X, xhat=XH, y=Y, u=U, h_x=HX, h_xhat=HXH,
        bound_level=LEV, bound_level_raw=RAW, box_half_widths=HW,
        slack=SLK, qp_status=QPS, containment=CON, err_norm=ERR, p_eigs=PEIG,
        bound_shape=SHP,
        status=STATUS_NAMES[int(status)], records=int(records), wall_time=wall,
    )
    if model.code == 1 and barrier.code == 1 and traj.records > 0:
        cx, cy, r = barrier.params[0], barrier.params[1], barrier.params[2]
        dist_sq = (X[: traj.records, 0] - cx) ** 2 + (X[: traj.records, 1] - cy) ** 2
        traj.meta["min_dist_sq"] = float((dist_sq - r * r).min())
        traj.meta["min_dist"] = float(np.sqrt(dist_sq.min()))
        traj.meta["radius"] = float(r)
    return traj


def batch_run(scenarios, seeds=None, lipschitz_probes: int = 32) -> list:
    """Run scenarios x seeds; returns one summary row per run.

    Each member failure is recorded in its row and the batch continues.
    Set lipschitz_probes=0 to skip the per-run sensitivity probe.
    """
    rows = []
    for s in scenarios:
        for seed in seeds if seeds is not None else [s.seed]:
            si = s.replace_seed(int(seed))
            try:
                traj = simulate(si)
                probe = (
                    probe_lipschitz(si, traj, n_probes=lipschitz_probes)
                    if lipschitz_probes > 0
                    else float("nan")
                )
                row = {
                    "name": si.name,
                    "seed": int(seed),
                    "status": traj.status,
                    "min_h": traj.min_h,
                    "containment_rate": traj.containment_rate,
                    "max_lipschitz_probe": probe,
                    "runtime_s": traj.wall_time,
                }
                if "min_dist_sq" in traj.meta:
                    row["min_dist_sq_minus_r_sq"] = traj.meta["min_dist_sq"]
            except Exception as exc:  # noqa: BLE001 - batch isolation is the contract
                row = {"name": si.name, "seed": int(seed), "status": f"error: {exc}",
                       "min_h": float("nan"), "containment_rate": float("nan"),
                       "max_lipschitz_probe": float("nan"), "runtime_s": float("nan")}
            rows.append(row)
    return rows


def controller_response(cs: CompiledScenario, t: float, xhat, y, hw, m_t=None, mdot_t=None):
    """Controller output at (t, xhat, y) for a given box half-width snapshot.

    Used by the Lipschitz probes: the box radius stays frozen while xhat is
    perturbed, matching the fixed-radius continuity statement.
    """
    xhat = np.asarray(xhat, float)
    u_des = cs.nominal(t, xhat)
    model, barrier = cs.model, cs.barrier
    if cs.ctrl_code == CTRL_BASELINE:
        u, status, _ = baseline_qp_kernel(
            model.code, model.params, barrier.code, barrier.params,
            barrier.alpha.code, barrier.alpha.gain, barrier.kappa.code,
            cs.robust_d_bar, model.g_d, xhat, u_des, cs.qp_cap, np.zeros(1, bool),
        )
    elif cs.ctrl_code == CTRL_APPROACH1:
        bound = cs.observer.iss_bound()
        mt = bound.M(t) if m_t is None else m_t
        mdt = bound.Mdot(t) if mdot_t is None else mdot_t
        u, status, _ = observer_cbf_qp_kernel(
            barrier.code, barrier.params, barrier.alpha.code, barrier.alpha.gain,
            barrier.gamma_h, cs.A_obs, cs.B_obs, model.C, cs.L_obs,
            mt, mdt, xhat, np.atleast_1d(np.asarray(y, float)), u_des, cs.qp_cap,
            np.zeros(1, bool),
        )
    else:
        u, status, _, _ = a2_filter_kernel(
            model.code, model.params, barrier.code, barrier.params,
            barrier.alpha.code, barrier.alpha.gain, barrier.kappa.code,
            model.w_bar, model.g_d, xhat - hw, xhat + hw, xhat, u_des, cs.qp_cap,
            np.zeros(2 * model.m + 1, bool),
        )
    if status != 0:
        return None
    return u


def probe_lipschitz(s: Scenario, traj: Trajectory, n_probes: int = 1000,
                    step: float = 1e-4, seed: int = 0) -> float:
    """Max finite-difference ratio ||du|| / ||dxhat|| over sampled log points."""
    cs = compile_scenario(s)
    rng = np.random.default_rng(seed)
    r = traj.records
    if r < 2:
        return float("nan")
    worst = 0.0
    for _ in range(n_probes):
        k = int(rng.integers(0, r))
        t = float(traj.t[k])
        xhat = traj.xhat[k]
        y = traj.y[k]
        hw = traj.box_half_widths[k]
        u0 = controller_response(cs, t, xhat, y, hw)
        if u0 is None:
            continue
        d = rng.normal(size=len(xhat))
        d *= step / np.linalg.norm(d)
        u1 = controller_response(cs, t, xhat + d, y, hw)
        if u1 is None:
            continue
        worst = max(worst, float(np.linalg.norm(u1 - u0) / step))
    return worst


# ---------------------------------------------------------------------------
# master loop kernel


@maybe_njit
def _plant_rhs(mc, mp, Gd, x, u, dbuf, out):
    n = x.shape[0]
    fb = np.empty(n)
    model_f(mc, mp, x, fb)
    gb = np.empty((n, u.shape[0]))
    model_g(mc, mp, x, gb)
    xd = fb + gb @ u + Gd @ dbuf
    for i in range(n):
        out[i] = xd[i]


@maybe_njit
def sim_loop_kernel(
    n_steps, dt,
    mc, mp, Gd, Cd, Cmeas,
    dbar, vbar, wbar,
    bc, bpar, alpha_code, alpha_gain, kappa_code, gamma_h,
    ctrl_code, robust_dbar, qp_cap,
    obs_code,
    A_obs, B_obs, L_obs, P_luen, Pinv_luen,
    theta, delta, omega_bar, lam_max, cond_sqrt,
    Qd, Rinv, P0, V0, p_lo, p_hi,
    Kn, u_eq, x_ref,
    d_code, d_dir, d_mag, d_freq, d_phase, d_dwell, d_table,
    v_code, v_dir, v_mag, v_freq, v_phase, v_dwell, v_table,
    x0, xh0,
    axis0, axis1,
    T, X, XH, Y, U, HX, HXH, LEV, RAW, HW, SLK, QPS, CON, ERR, PEIG, SHP,
):
    n = x0.shape[0]
    m = u_eq.shape[0]
    n_y = Cmeas.shape[0]
    n_d = Gd.shape[1]
    n_v = Cd.shape[1]

    x = x0.copy()
    xh = xh0.copy()
    P = P0.copy()
    V = V0

    dbuf = np.empty(n_d)
    vbuf = np.empty(n_v)
    warm1 = np.zeros(1, np.bool_)
    warm2 = np.zeros(2 * m + 1, np.bool_)
    hw = np.empty(n)

    kx = np.empty((4, n))
    kh = np.empty((4, n))
    kP = np.empty((4, n, n))
    kV = np.empty(4)

    status = 0
    k = 0
    while k <= n_steps:
        t = k * dt
        dist_eval(v_code, v_dir, v_mag, v_freq, v_phase, v_dwell, v_table, t, vbuf)
        y = Cmeas @ x + Cd @ vbuf
        e = x - xh
        err = 0.0
        for i in range(n):
            err += e[i] * e[i]
        err = np.sqrt(err)

        m_t = 0.0
        mdot_t = 0.0
        if obs_code == OBS_LUENBERGER:
            ex = np.exp(-theta * t)
            fl = omega_bar / theta
            if delta >= fl:
                m_t = cond_sqrt * ((delta - fl) * ex + fl)
                mdot_t = -theta * cond_sqrt * (delta - fl) * ex
            else:
                m_t = cond_sqrt * fl
                mdot_t = 0.0
            rad = delta * ex + fl * (1.0 - ex)
            level = lam_max * rad * rad
            for i in range(n):
                hw[i] = np.sqrt(level * Pinv_luen[i, i])
            quad = 0.0
            for i in range(n):
                for j in range(n):
                    quad += e[i] * P_luen[i, j] * e[j]
            if ctrl_code == CTRL_APPROACH1:
                contained = err <= m_t + 1e-9
            else:
                contained = quad <= level * (1.0 + 1e-9) + 1e-12
            PEIG[k, 0] = lam_max / (cond_sqrt * cond_sqrt)
            PEIG[k, 1] = lam_max
        else:
            level = V
            for i in range(n):
                hw[i] = np.sqrt(max(V * P[i, i], 0.0))
            z = np.linalg.solve(P, e)
            quad = 0.0
            for i in range(n):
                quad += e[i] * z[i]
            contained = quad <= V * (1.0 + 1e-9) + 1e-12
            w = np.linalg.eigvalsh(P)
            PEIG[k, 0] = w[0]
            PEIG[k, 1] = w[n - 1]
            if w[0] < p_lo or w[n - 1] > p_hi:
                status = 5
                break

        u_des = u_eq + Kn @ (x_ref - xh)
        qps = 0
        slack = 0.0
        u = u_des
        if ctrl_code == CTRL_BASELINE:
            u, qps, slack = baseline_qp_kernel(
                mc, mp, bc, bpar, alpha_code, alpha_gain, kappa_code,
                robust_dbar, Gd, xh, u_des, qp_cap, warm1,
            )
        elif ctrl_code == CTRL_APPROACH1:
            u, qps, slack = observer_cbf_qp_kernel(
                bc, bpar, alpha_code, alpha_gain, gamma_h,
                A_obs, B_obs, Cmeas, L_obs, m_t, mdot_t,
                xh, y, u_des, qp_cap, warm1,
            )
        else:
            u, qps, slack, channel = a2_filter_kernel(
                mc, mp, bc, bpar, alpha_code, alpha_gain, kappa_code,
                wbar, Gd, xh - hw, xh + hw, xh, u_des, qp_cap, warm2,
            )
            if qps == 3:
                status = 3
                break
            if qps == 4:
                status = 6
                break
        if qps == 1 or qps == 2:
            status = qps
            break

        T[k] = t
        for i in range(n):
            X[k, i] = x[i]
            XH[k, i] = xh[i]
            HW[k, i] = hw[i]
        for i in range(n_y):
            Y[k, i] = y[i]
        for i in range(m):
            U[k, i] = u[i]
        HX[k] = barrier_h(bc, bpar, x)
        HXH[k] = barrier_h(bc, bpar, xh)
        for i in range(n):
            for j in range(n):
                SHP[k, i, j] = Pinv_luen[i, j] if obs_code == OBS_LUENBERGER else P[i, j]
        RAW[k] = level
        if ctrl_code == CTRL_APPROACH1:
            LEV[k] = m_t
        else:
            LEV[k] = np.sqrt(hw[axis0] * hw[axis0] + hw[axis1] * hw[axis1])
        SLK[k] = slack
        QPS[k] = qps
        CON[k] = contained
        ERR[k] = err

        if k == n_steps:
            k += 1
            break

        # joint RK4 over [t, t + dt]; u held, d(t), v(t), y(t) continuous
        for stage in range(4):
            if stage == 0:
                tau = t
                xs = x
                xhs = xh
                Ps = P
                Vs = V
            elif stage == 1:
                tau = t + 0.5 * dt
                xs = x + 0.5 * dt * kx[0]
                xhs = xh + 0.5 * dt * kh[0]
                Ps = np.ascontiguousarray(P + 0.5 * dt * kP[0])
                Vs = V + 0.5 * dt * kV[0]
            elif stage == 2:
                tau = t + 0.5 * dt
                xs = x + 0.5 * dt * kx[1]
                xhs = xh + 0.5 * dt * kh[1]
                Ps = np.ascontiguousarray(P + 0.5 * dt * kP[1])
                Vs = V + 0.5 * dt * kV[1]
            else:
                tau = t + dt
                xs = x + dt * kx[2]
                xhs = xh + dt * kh[2]
                Ps = np.ascontiguousarray(P + dt * kP[2])
                Vs = V + dt * kV[2]
            dist_eval(d_code, d_dir, d_mag, d_freq, d_phase, d_dwell, d_table, tau, dbuf)
            dist_eval(v_code, v_dir, v_mag, v_freq, v_phase, v_dwell, v_table, tau, vbuf)
            _plant_rhs(mc, mp, Gd, xs, u, dbuf, kx[stage])
            ys = Cmeas @ xs + Cd @ vbuf
            if obs_code == OBS_LUENBERGER:
                xhd = A_obs @ xhs + B_obs @ u + L_obs @ (ys - Cmeas @ xhs)
                for i in range(n):
                    kh[stage, i] = xhd[i]
                kV[stage] = 0.0
                for i in range(n):
                    for j in range(n):
                        kP[stage, i, j] = 0.0
            else:
                kV[stage] = dekf_rhs(mc, mp, xhs, Ps, Vs, ys, u, Qd, Rinv, theta,
                                     Gd, Cd, dbar, vbar, Cmeas,
                                     kh[stage], kP[stage])

        x = x + (dt / 6.0) * (kx[0] + 2.0 * kx[1] + 2.0 * kx[2] + kx[3])
        xh = xh + (dt / 6.0) * (kh[0] + 2.0 * kh[1] + 2.0 * kh[2] + kh[3])
        if obs_code == OBS_DEKF:
            Pn = P + (dt / 6.0) * (kP[0] + 2.0 * kP[1] + 2.0 * kP[2] + kP[3])
            for i in range(n):
                for j in range(n):
                    P[i, j] = 0.5 * (Pn[i, j] + Pn[j, i])
            if spd_check(P) != 0:
                status = 4
                k += 1
                break
            V = V + (dt / 6.0) * (kV[0] + 2.0 * kV[1] + 2.0 * kV[2] + kV[3])
            if V < 0.0:
                V = 0.0
        k += 1

    return status, k
