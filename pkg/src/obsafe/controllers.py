"""Safety-filter controllers: baseline CBF-QP, margin-based (ISS observer)
QP, set-based (bounded-error observer) QP, and the LQR nominal policy they
filter.

All three filters minimize ||u - u_des||^2 subject to their respective
safety constraint. The set-based filter solves the 2m-variable
reformulation with auxiliary variables k_i <= min(b_i^- u_i, b_i^+ u_i);
the k block gets a 1e-9 ||k||^2 regularization so the Hessian stays
strictly positive definite, which perturbs the u minimizer well below test
tolerances.
"""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._jit import maybe_njit
from .barriers import (
    BARRIER_DI,
    BARRIER_QUAD,
    Barrier,
    alpha_eval,
    barrier_grad,
    barrier_h,
    kappa_eval,
)
from .bounds import (
    Box,
    box_enclosure,
    di_bound_a_kernel,
    quad_bound_a_kernel,
    quad_bound_b_kernel,
)
from .errors import ChannelSignError, BarrierSingularError, ObsafeError, UnsafeStartError
from .linalg import solve_care
from .observers import EllipsoidalBound, IssBound, LuenbergerObserver
from .qp import qp_solve_kernel
from .systems import MODEL_DI, MODEL_QUAD, SystemModel, model_f, model_g, model_jac

K_REG = 2e-9  # Hessian entry for the auxiliary block (1e-9 ||k||^2)

CTRL_BASELINE = 0
CTRL_APPROACH1 = 1
CTRL_APPROACH2 = 2

_CTRL_KINDS = {"baseline": CTRL_BASELINE, "approach1": CTRL_APPROACH1, "approach2": CTRL_APPROACH2}


class QpFilterError(ObsafeError):
    """The safety QP failed (infeasible or hit the iteration cap)."""


@dataclass(frozen=True)
class NominalPolicy:
    """u_des(t, xhat) = u_eq - K (xhat - x_ref)."""

    K: np.ndarray
    u_eq: np.ndarray
    x_ref: np.ndarray

    def __call__(self, t: float, xhat) -> np.ndarray:
        return self.u_eq - self.K @ (np.asarray(xhat, float) - self.x_ref)


@dataclass
class ControllerSpec:
    kind: str
    nominal: Callable
    barrier: Barrier
    model: SystemModel
    qp_iteration_cap: int = 100
    robust_d_bar: float = 0.0

    def __post_init__(self):
        if self.kind not in _CTRL_KINDS:
            raise ValueError(f"unknown controller kind '{self.kind}'")

    @property
    def code(self) -> int:
        return _CTRL_KINDS[self.kind]


def lqr_nominal(model: SystemModel, x_eq, u_eq, Q, R, x_ref=None) -> NominalPolicy:
    """LQR gain about an equilibrium; tracks x_ref (default: the equilibrium)."""
    x_eq = np.asarray(x_eq, float)
    u_eq = np.asarray(u_eq, float)
    A = np.zeros((model.n, model.n))
    model_jac(model.code, model.params, x_eq, u_eq, A)
    B = model.g(x_eq)
    _, K = solve_care(A, B, np.asarray(Q, float), np.asarray(R, float))
    ref = x_eq if x_ref is None else np.asarray(x_ref, float)
    return NominalPolicy(K=K, u_eq=u_eq, x_ref=ref)


def check_safe_start_iss(barrier: Barrier, bound: IssBound, xhat0) -> None:
    """Raise unless h(xhat0) >= gamma_h * M(0)."""
    margin = barrier.h(np.asarray(xhat0, float)) - barrier.gamma_h * bound.M(0.0)
    if margin < 0.0:
        raise UnsafeStartError(
            f"xhat(0) outside safe-start set: h - gamma_h M(0) = {margin:.6g} < 0"
        )


def check_safe_start_be(barrier: Barrier, ell: EllipsoidalBound,
                        n_samples: int = 1000, seed: int = 0) -> None:
    """Raise unless the initial error set lies inside the safe set.

    Checked at the enclosure-box corners plus sampled ellipsoid boundary
    points (exact set inclusion is unavailable for nonlinear h).
    """
    box = box_enclosure(ell)
    n = len(ell.center)
    for mask in range(min(2**n, 64)):
        corner = np.where(
            [(mask >> i) & 1 for i in range(n)], box.hi, box.lo
        ).astype(float)
        if barrier.h(corner) < 0.0:
            raise UnsafeStartError(
                "initial error set leaves the safe set at a box corner"
            )
    for x in ell.boundary_points(n_samples, seed=seed):
        if barrier.h(x) < 0.0:
            raise UnsafeStartError(
                "initial error set leaves the safe set on the ellipsoid boundary"
            )


def _run_qp(kind, *args):
    u, status, slack = args[0](*args[1:])
    if status == 1:
        raise QpFilterError(f"{kind}: safety QP infeasible")
    if status == 2:
        raise QpFilterError(f"{kind}: safety QP hit the iteration cap")
    return u, slack


def baseline_filter(barrier: Barrier, model: SystemModel, xhat, u_des,
                    robust_d_bar: float = 0.0, cap: int = 100):
    """Classic CBF-QP evaluated at the state estimate (no observer margin)."""
    xhat = np.asarray(xhat, float)
    u_des = np.atleast_1d(np.asarray(u_des, float))
    u, status, slack = baseline_qp_kernel(
        model.code, model.params, barrier.code, barrier.params,
        barrier.alpha.code, barrier.alpha.gain, barrier.kappa.code,
        float(robust_d_bar), model.g_d, xhat, u_des, int(cap),
        np.zeros(1, bool),
    )
    if status != 0:
        raise QpFilterError("baseline: safety QP failed")
    return u


def approach1_filter(barrier: Barrier, observer: LuenbergerObserver, t: float,
                     xhat, y, u_des, cap: int = 100):
    """Margin-based estimate-feedback filter on the observer fields (p, q)."""
    xhat = np.asarray(xhat, float)
    y = np.atleast_1d(np.asarray(y, float))
    u_des = np.atleast_1d(np.asarray(u_des, float))
    bound = observer.iss_bound()
    u, status, slack = observer_cbf_qp_kernel(
        barrier.code, barrier.params, barrier.alpha.code, barrier.alpha.gain,
        barrier.gamma_h, observer.A, observer.B, observer.C, observer.L,
        bound.M(t), bound.Mdot(t), xhat, y, u_des, int(cap), np.zeros(1, bool),
    )
    if status != 0:
        raise QpFilterError("approach1: safety QP failed")
    return u


def approach2_filter(barrier: Barrier, model: SystemModel, ell: EllipsoidalBound,
                     t: float, xhat, u_des, cap: int = 100):
    """Set-based estimate-feedback filter over the error ellipsoid."""
    xhat = np.asarray(xhat, float)
    u_des = np.atleast_1d(np.asarray(u_des, float))
    box = box_enclosure(ell)
    u, status, slack, channel = a2_filter_kernel(
        model.code, model.params, barrier.code, barrier.params,
        barrier.alpha.code, barrier.alpha.gain, barrier.kappa.code,
        model.w_bar, model.g_d, box.lo, box.hi, xhat, u_des, int(cap),
        np.zeros(2 * len(u_des) + 1, bool),
    )
    if status == 3:
        bm, bp = np.zeros(model.m), np.zeros(model.m)
        quad_bound_b_kernel(barrier.params, model.params, box.lo, box.hi, bm, bp)
        raise ChannelSignError(int(channel), float(bm[channel]), float(bp[channel]))
    if status == 4:
        raise BarrierSingularError("barrier singular over the error box")
    if status != 0:
        raise QpFilterError("approach2: safety QP failed")
    return u


def approach2_qp(a: float, b_minus, b_plus, u_des, cap: int = 100):
    """Solve the set-based QP for given certified bounds (test hook)."""
    u_des = np.atleast_1d(np.asarray(u_des, float))
    u, status, slack = a2_qp_kernel(
        float(a), np.asarray(b_minus, float), np.asarray(b_plus, float),
        u_des, int(cap), np.zeros(2 * len(u_des) + 1, bool),
    )
    if status != 0:
        raise QpFilterError("approach2 reformulation QP failed")
    return u


# ---------------------------------------------------------------------------
# hot kernels


@maybe_njit
def halfspace_qp_kernel(row, rhs, u_des, cap, warm):
    """min ||u - u_des||^2 s.t. row.u >= rhs; returns (u, status, slack)."""
    m = u_des.shape[0]
    s = 0.0
    for i in range(m):
        s += row[i] * u_des[i]
    if s >= rhs:
        return u_des.copy(), 0, s - rhs
    H = np.eye(m)
    A = np.empty((1, m))
    for i in range(m):
        A[0, i] = row[i]
    b = np.empty(1)
    b[0] = rhs
    u, lam, active, status, iters = qp_solve_kernel(H, -u_des, A, b, cap, warm[:1])
    s = 0.0
    for i in range(m):
        s += row[i] * u[i]
    return u, status, s - rhs


@maybe_njit
def a2_qp_kernel(a, bm, bp, u_des, cap, warm):
    """Set-based QP in (u, k): min ||u - u_des||^2 + 1e-9 ||k||^2
    s.t. k_i <= b_i^- u_i, k_i <= b_i^+ u_i, sum k >= -a."""
    m = u_des.shape[0]
    nv = 2 * m
    H = np.zeros((nv, nv))
    q = np.zeros(nv)
    for i in range(m):
        H[i, i] = 1.0
        H[m + i, m + i] = K_REG
        q[i] = -u_des[i]
    A = np.zeros((2 * m + 1, nv))
    b = np.zeros(2 * m + 1)
    for i in range(m):
        A[2 * i, i] = bm[i]
        A[2 * i, m + i] = -1.0
        A[2 * i + 1, i] = bp[i]
        A[2 * i + 1, m + i] = -1.0
    for i in range(m):
        A[2 * m, m + i] = 1.0
    b[2 * m] = -a
    z, lam, active, status, iters = qp_solve_kernel(H, q, A, b, cap, warm)
    u = z[:m].copy()
    slack = a
    for i in range(m):
        t1 = bm[i] * u[i]
        t2 = bp[i] * u[i]
        slack += t1 if t1 < t2 else t2
    return u, status, slack


@maybe_njit
def baseline_qp_kernel(mc, mp, bc, bpar, alpha_code, alpha_gain, kappa_code,
                       robust_dbar, Gd, xhat, u_des, cap, warm):
    n = xhat.shape[0]
    m = u_des.shape[0]
    grad = np.empty(n)
    if barrier_grad(bc, bpar, xhat, grad) != 0:
        return u_des.copy(), 1, 0.0
    h = barrier_h(bc, bpar, xhat)
    f = np.empty(n)
    model_f(mc, mp, xhat, f)
    g = np.empty((n, m))
    model_g(mc, mp, xhat, g)
    row = grad @ g
    lf = 0.0
    for i in range(n):
        lf += grad[i] * f[i]
    lgd_vec = grad @ Gd
    lgd = 0.0
    for i in range(lgd_vec.shape[0]):
        lgd += lgd_vec[i] * lgd_vec[i]
    lgd = np.sqrt(lgd)
    rhs = -lf + kappa_eval(kappa_code, h) * lgd * robust_dbar \
        - alpha_eval(alpha_code, alpha_gain, h)
    return halfspace_qp_kernel(row, rhs, u_des, cap, warm)


@maybe_njit
def observer_cbf_qp_kernel(bc, bpar, alpha_code, alpha_gain, gamma_h,
                    A_obs, B_obs, C_obs, L_obs, m_t, mdot_t,
                    xhat, y, u_des, cap, warm):
    n = xhat.shape[0]
    grad = np.empty(n)
    if barrier_grad(bc, bpar, xhat, grad) != 0:
        return u_des.copy(), 1, 0.0
    h = barrier_h(bc, bpar, xhat)
    innov = y - C_obs @ xhat
    p_vec = A_obs @ xhat + L_obs @ innov
    row = grad @ B_obs
    lp = 0.0
    for i in range(n):
        lp += grad[i] * p_vec[i]
    rhs = -lp - alpha_eval(alpha_code, alpha_gain, h - gamma_h * m_t) + gamma_h * mdot_t
    return halfspace_qp_kernel(row, rhs, u_des, cap, warm)


@maybe_njit
def a2_bounds_kernel(mc, mp, bc, bpar, alpha_code, alpha_gain, kappa_code,
                     wbar, Gd, lo, hi, xhat, bm, bp_out):
    """Compute (a, b-, b+) for the supported barrier/model pairings.

    Returns (status, a, channel): status 0 ok, 3 sign condition violated,
    4 unsupported pairing or singular box.
    """
    m = bm.shape[0]
    a = 0.0
    if bc == BARRIER_DI and mc == MODEL_DI:
        grad = np.empty(2)
        barrier_grad(bc, bpar, xhat, grad)
        lgd_vec = grad @ Gd
        lgd = 0.0
        for i in range(lgd_vec.shape[0]):
            lgd += lgd_vec[i] * lgd_vec[i]
        lgd = np.sqrt(lgd)
        a = di_bound_a_kernel(bpar, lgd, alpha_code, alpha_gain, kappa_code, wbar, lo, hi)
        bm[0] = -1.0  # grad . g = (-alpha0, -1) . (0, 1) for the ceiling barrier
        bp_out[0] = -1.0
    elif bc == BARRIER_QUAD and mc == MODEL_QUAD:
        flag, aval = quad_bound_a_kernel(bpar, mp, alpha_code, alpha_gain,
                                         kappa_code, wbar, lo, hi)
        if flag != 0:
            return 4, 0.0, -1
        a = aval
        if quad_bound_b_kernel(bpar, mp, lo, hi, bm, bp_out) != 0:
            return 4, 0.0, -1
    else:
        return 4, 0.0, -1
    for i in range(m):
        if bm[i] < -1e-12 and bp_out[i] > 1e-12:
            return 3, a, i
    return 0, a, -1


@maybe_njit
def a2_filter_kernel(mc, mp, bc, bpar, alpha_code, alpha_gain, kappa_code,
                     wbar, Gd, lo, hi, xhat, u_des, cap, warm):
    m = u_des.shape[0]
    bm = np.zeros(m)
    bp_out = np.zeros(m)
    status, a, channel = a2_bounds_kernel(
        mc, mp, bc, bpar, alpha_code, alpha_gain, kappa_code, wbar, Gd,
        lo, hi, xhat, bm, bp_out,
    )
    if status != 0:
        return u_des.copy(), status, 0.0, channel
    u, qp_status, slack = a2_qp_kernel(a, bm, bp_out, u_des, cap, warm)
    return u, qp_status, slack, -1
