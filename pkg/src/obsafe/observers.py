"""State observers with certified estimation-error bounds.

Two families:

* LuenbergerObserver - linear observer whose gain comes from the shifted
  Lyapunov equation. It carries an ISS-style norm bound M(t) and,
  equivalently, a decaying ellipsoidal bound (so it serves both the
  margin-based and the set-based safety filters).
* DekfObserver - deterministic extended Kalman filter with a Riccati-type
  P equation and a scalar error-level ODE V; the error set is the
  ellipsoid {x : (x - xhat)' P^{-1} (x - xhat) <= V}.

Observer ODEs are integrated with one fixed-step RK4 per control step,
holding y and u over the step.
"""
from dataclasses import dataclass, field

import numpy as np

from ._jit import maybe_njit
from .errors import ObserverBoundError
from .linalg import solve_lyapunov
from .systems import SystemModel, model_f, model_g, model_jac

OBS_LUENBERGER = 0
OBS_DEKF = 1

V_SQRT_EPS = 1e-12


@dataclass(frozen=True)
class IssBound:
    """Non-increasing bound M(t) on the estimation error norm.

    M(t) = cond_sqrt * ((delta - floor) e^{-theta t} + floor) when the
    initial radius dominates the disturbance floor = omega_bar / theta;
    otherwise the constant envelope cond_sqrt * floor.
    """

    cond_sqrt: float
    delta: float
    theta: float
    omega_bar: float = 0.0

    def M(self, t: float) -> float:
        fl = self.omega_bar / self.theta
        if self.delta >= fl:
            return self.cond_sqrt * ((self.delta - fl) * np.exp(-self.theta * t) + fl)
        return self.cond_sqrt * fl

    def Mdot(self, t: float) -> float:
        fl = self.omega_bar / self.theta
        if self.delta >= fl:
            return -self.theta * self.cond_sqrt * (self.delta - fl) * np.exp(-self.theta * t)
        return 0.0


@dataclass(frozen=True)
class EllipsoidalBound:
    """{x : (x - center)' shape^{-1} (x - center) <= level}."""

    shape: np.ndarray
    level: float
    center: np.ndarray

    def __post_init__(self):
        if self.level <= 0.0:
            raise ValueError("level must be positive")
        if np.linalg.eigvalsh(0.5 * (self.shape + self.shape.T)).min() <= 0.0:
            raise ValueError("shape must be positive definite")

    def contains(self, x, tol: float = 1e-9) -> bool:
        e = np.asarray(x, float) - self.center
        val = float(e @ np.linalg.solve(self.shape, e))
        return val <= self.level * (1.0 + tol) + 1e-12

    def boundary_points(self, k: int, seed: int = 0) -> np.ndarray:
        """k points on the ellipsoid boundary (for sampling checks)."""
        rng = np.random.default_rng(seed)
        n = len(self.center)
        z = rng.normal(size=(k, n))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        w, U = np.linalg.eigh(0.5 * (self.shape + self.shape.T))
        half = U @ np.diag(np.sqrt(w)) @ U.T
        return self.center + np.sqrt(self.level) * z @ half.T


def iss_as_ellipsoid(bound: IssBound, t: float, center) -> EllipsoidalBound:
    """Embed an ISS norm-ball bound as an ellipsoidal bound (unit shape)."""
    m = bound.M(t)
    return EllipsoidalBound(
        shape=np.eye(len(center)), level=max(m * m, 1e-300), center=np.asarray(center, float)
    )


class LuenbergerObserver:
    """xhat' = A xhat + B u + L (y - C xhat) with L = P^{-1} C' / 2."""

    def __init__(self, A, B, C, theta: float, delta: float, xhat0=None,
                 g_d=None, c_d=None, d_bar: float = 0.0, v_bar: float = 0.0):
        self.A = np.asarray(A, float)
        n = self.A.shape[0]
        self.B = np.asarray(B, float).reshape(n, -1)
        self.C = np.atleast_2d(np.asarray(C, float))
        self.theta = float(theta)
        self.delta = float(delta)
        self.P = solve_lyapunov(self.A, self.C, self.theta)
        self.Pinv = np.linalg.inv(self.P)
        self.L = 0.5 * self.Pinv @ self.C.T
        w = np.linalg.eigvalsh(self.P)
        self.lam_min = float(w[0])
        self.lam_max = float(w[-1])
        self.cond_sqrt = float(np.sqrt(self.lam_max / self.lam_min))
        self.omega_bar = 0.0
        if g_d is not None and d_bar > 0.0:
            self.omega_bar += float(np.linalg.norm(np.asarray(g_d, float), 2)) * d_bar
        if c_d is not None and v_bar > 0.0:
            self.omega_bar += float(np.linalg.norm(self.L @ np.asarray(c_d, float), 2)) * v_bar
        self.xhat = np.zeros(n) if xhat0 is None else np.asarray(xhat0, float).copy()

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def p(self, xhat, y):
        return self.A @ xhat + self.L @ (np.atleast_1d(y) - self.C @ xhat)

    def q(self, xhat, y):
        return self.B

    def iss_bound(self) -> IssBound:
        return IssBound(self.cond_sqrt, self.delta, self.theta, self.omega_bar)

    def _radius(self, t: float) -> float:
        fl = self.omega_bar / self.theta
        return self.delta * np.exp(-self.theta * t) + fl * (1.0 - np.exp(-self.theta * t))

    def be_level(self, t: float) -> float:
        return self.lam_max * self._radius(t) ** 2

    def current_bound(self, t: float) -> EllipsoidalBound:
        return EllipsoidalBound(
            shape=self.Pinv.copy(), level=max(self.be_level(t), 1e-300), center=self.xhat.copy()
        )

    def step(self, y, u, dt: float):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.xhat = luen_rk4(
            self.A, self.B, self.C, self.L,
            self.xhat, np.atleast_1d(np.asarray(y, float)),
            np.atleast_1d(np.asarray(u, float)), float(dt),
        )
        return self.xhat


def luenberger_design(model_or_A, B=None, C=None, theta: float = 1.0,
                      delta: float = 1.0, xhat0=None) -> LuenbergerObserver:
    """Design a Luenberger observer from (A, B, C) or a linear SystemModel."""
    if isinstance(model_or_A, SystemModel):
        model = model_or_A
        n = model.n
        A = np.zeros((n, n))
        # linear plants only: Jacobian of the drift is state-independent
        model_jac(model.code, model.params, np.zeros(n), np.zeros(model.m), A)
        Bm = model.g(np.zeros(n))
        return LuenbergerObserver(
            A, Bm, model.C, theta, delta, xhat0=xhat0,
            g_d=model.g_d, c_d=model.c_d, d_bar=model.d_bar, v_bar=model.v_bar,
        )
    return LuenbergerObserver(model_or_A, B, C, theta, delta, xhat0=xhat0)


class DekfObserver:
    """Deterministic EKF with bounded disturbances and scalar error level V."""

    def __init__(self, model: SystemModel, Q, R, theta: float, P0, V0: float,
                 xhat0=None, p_lo: float = 1e-10, p_hi: float = 1e8):
        self.model = model
        n = model.n
        self.Q = np.asarray(Q, float)
        self.R = np.atleast_2d(np.asarray(R, float))
        self.Rinv = np.linalg.inv(self.R)
        self.theta = float(theta)
        self.P = np.asarray(P0, float).copy()
        self.V = float(V0)
        self.D1 = model.g_d.copy()
        self.D2 = model.c_d.copy()
        self.C = model.C.copy()
        self.p_lo = float(p_lo)
        self.p_hi = float(p_hi)
        self.xhat = np.zeros(n) if xhat0 is None else np.asarray(xhat0, float).copy()
        self._check_P()

    def _check_P(self):
        w = np.linalg.eigvalsh(0.5 * (self.P + self.P.T))
        if w.min() <= 0.0:
            raise ObserverBoundError("observer bound invalid: P not positive definite")
        if w.min() < self.p_lo or w.max() > self.p_hi:
            raise ObserverBoundError(
                f"observer bound invalid: P eigenvalues [{w.min():.3e}, {w.max():.3e}] "
                f"left the declared band [{self.p_lo:.3e}, {self.p_hi:.3e}]"
            )

    def gain(self):
        return self.P @ self.C.T @ self.Rinv

    def p(self, xhat, y):
        L = self.gain()
        return self.model.f(xhat) + L @ (np.atleast_1d(y) - self.model.c(xhat))

    def q(self, xhat, y):
        return self.model.g(xhat)

    def current_bound(self, t: float = 0.0) -> EllipsoidalBound:
        return EllipsoidalBound(
            shape=self.P.copy(), level=max(self.V, 1e-300), center=self.xhat.copy()
        )

    def step(self, y, u, dt: float):
        if dt <= 0:
            raise ValueError("dt must be positive")
        xh, P, V = dekf_rk4(
            self.model.code, self.model.params,
            self.xhat, self.P, self.V,
            np.atleast_1d(np.asarray(y, float)), np.atleast_1d(np.asarray(u, float)),
            self.Q, self.Rinv, self.theta, self.D1, self.D2,
            self.model.d_bar, self.model.v_bar, self.C, float(dt),
        )
        self.xhat, self.P, self.V = xh, 0.5 * (P + P.T), max(V, 0.0)
        self._check_P()
        return self.xhat


def observer_step(obs, xhat, y, u, dt: float):
    """Pure one-step advance (no observer mutation).

    Luenberger: returns the new estimate. DEKF: returns (xhat, P, V).
    """
    y = np.atleast_1d(np.asarray(y, float))
    u = np.atleast_1d(np.asarray(u, float))
    if isinstance(obs, LuenbergerObserver):
        return luen_rk4(obs.A, obs.B, obs.C, obs.L, np.asarray(xhat, float), y, u, float(dt))
    xh, P, V = dekf_rk4(
        obs.model.code, obs.model.params, np.asarray(xhat, float), obs.P, obs.V,
        y, u, obs.Q, obs.Rinv, obs.theta, obs.D1, obs.D2,
        obs.model.d_bar, obs.model.v_bar, obs.C, float(dt),
    )
    return xh, 0.5 * (P + P.T), max(V, 0.0)


# ---------------------------------------------------------------------------
# hot kernels


@maybe_njit
def luen_rhs(A, B, C, L, xh, y, u):
    return A @ xh + B @ u + L @ (y - C @ xh)


@maybe_njit
def luen_rk4(A, B, C, L, xh, y, u, dt):
    k1 = luen_rhs(A, B, C, L, xh, y, u)
    k2 = luen_rhs(A, B, C, L, xh + 0.5 * dt * k1, y, u)
    k3 = luen_rhs(A, B, C, L, xh + 0.5 * dt * k2, y, u)
    k4 = luen_rhs(A, B, C, L, xh + dt * k3, y, u)
    return xh + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@maybe_njit
def _sym_max_eig(M):
    w = np.linalg.eigvalsh(M)
    lam = w[w.shape[0] - 1]
    if lam < 0.0:
        lam = 0.0
    return lam


@maybe_njit
def dekf_rhs(code, mp, xh, P, V, y, u, Q, Rinv, theta, D1, D2, dbar, vbar, C,
             xh_dot, P_dot):
    """Coupled DEKF derivatives; returns Vdot.

    L = P C' R^{-1} is recomputed from the current P. The V generator uses
    spectral norms ||D1' P^{-1/2}|| and ||(L D2)' P^{-1/2}||, and 2 sqrt(V)
    is smoothed to 2 sqrt(V + eps) to keep the ODE Lipschitz at V = 0.
    """
    n = xh.shape[0]
    L = P @ (C.T @ Rinv)
    resid = y - C @ xh
    fbuf = np.empty(n)
    model_f(code, mp, xh, fbuf)
    gbuf = np.empty((n, u.shape[0]))
    model_g(code, mp, xh, gbuf)
    xd = fbuf + gbuf @ u + L @ resid
    for i in range(n):
        xh_dot[i] = xd[i]

    Aj = np.empty((n, n))
    model_jac(code, mp, xh, u, Aj)
    PCt = P @ C.T
    Pd = P @ Aj.T + Aj @ P - PCt @ Rinv @ PCt.T + Q + 2.0 * theta * P
    for i in range(n):
        for j in range(n):
            P_dot[i, j] = 0.5 * (Pd[i, j] + Pd[j, i])

    Pinv = np.linalg.inv(P)
    g1 = np.sqrt(_sym_max_eig(np.ascontiguousarray(D1.T @ Pinv @ D1)))
    LD2 = L @ D2
    g2 = np.sqrt(_sym_max_eig(np.ascontiguousarray(LD2.T @ Pinv @ LD2)))
    gen = g1 * dbar + g2 * vbar
    vv = V
    if vv < 0.0:
        vv = 0.0
    return -2.0 * theta * V + 2.0 * np.sqrt(vv + V_SQRT_EPS) * gen


@maybe_njit
def dekf_rk4(code, mp, xh, P, V, y, u, Q, Rinv, theta, D1, D2, dbar, vbar, C, dt):
    n = xh.shape[0]
    xk = np.empty((4, n))
    Pk = np.empty((4, n, n))
    vk = np.empty(4)

    vk[0] = dekf_rhs(code, mp, xh, P, V, y, u, Q, Rinv, theta, D1, D2, dbar, vbar, C,
                     xk[0], Pk[0])
    vk[1] = dekf_rhs(code, mp, xh + 0.5 * dt * xk[0],
                     np.ascontiguousarray(P + 0.5 * dt * Pk[0]), V + 0.5 * dt * vk[0],
                     y, u, Q, Rinv, theta, D1, D2, dbar, vbar, C, xk[1], Pk[1])
    vk[2] = dekf_rhs(code, mp, xh + 0.5 * dt * xk[1],
                     np.ascontiguousarray(P + 0.5 * dt * Pk[1]), V + 0.5 * dt * vk[1],
                     y, u, Q, Rinv, theta, D1, D2, dbar, vbar, C, xk[2], Pk[2])
    vk[3] = dekf_rhs(code, mp, xh + dt * xk[2],
                     np.ascontiguousarray(P + dt * Pk[2]), V + dt * vk[2],
                     y, u, Q, Rinv, theta, D1, D2, dbar, vbar, C, xk[3], Pk[3])

    xh2 = xh + (dt / 6.0) * (xk[0] + 2.0 * xk[1] + 2.0 * xk[2] + xk[3])
    P2 = P + (dt / 6.0) * (Pk[0] + 2.0 * Pk[1] + 2.0 * Pk[2] + Pk[3])
    V2 = V + (dt / 6.0) * (vk[0] + 2.0 * vk[1] + 2.0 * vk[2] + vk[3])
    return xh2, P2, V2


@maybe_njit
def spd_check(P):
    """1 when symmetric P fails a Cholesky factorization, else 0."""
    n = P.shape[0]
    L = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s = P[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                if s <= 0.0:
                    return 1
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    return 0
