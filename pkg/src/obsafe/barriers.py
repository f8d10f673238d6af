"""Barrier functions and the constraint rows built from them.

A Barrier bundles h, its gradient, a Lipschitz constant over the operating
box, an extended class-K gain alpha, and a non-increasing tuning function
kappa with kappa(0) = 1. Constraint-row builders translate the robust and
observer-robust CBF conditions into single inequality rows  row . u >= rhs
for the QP filters.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._jit import maybe_njit
from .errors import BarrierSingularError

BARRIER_DI = 0
BARRIER_QUAD = 1

ALPHA_LINEAR = 0
ALPHA_CUBIC = 1
KAPPA_ONE = 0
KAPPA_SIGMOID = 1

_ALPHA_KINDS = {"linear": ALPHA_LINEAR, "cubic": ALPHA_CUBIC}
_KAPPA_KINDS = {"one": KAPPA_ONE, "sigmoid": KAPPA_SIGMOID}


@dataclass(frozen=True)
class AlphaFn:
    kind: str
    gain: float = 1.0

    @property
    def code(self) -> int:
        return _ALPHA_KINDS[self.kind]

    def __call__(self, r: float) -> float:
        return alpha_eval(self.code, self.gain, float(r))


@dataclass(frozen=True)
class KappaFn:
    kind: str

    @property
    def code(self) -> int:
        return _KAPPA_KINDS[self.kind]

    def __call__(self, r: float) -> float:
        return kappa_eval(self.code, float(r))


@dataclass(frozen=True)
class Barrier:
    name: str
    code: int
    params: np.ndarray
    h: Callable
    grad_h: Callable
    gamma_h: float
    alpha: AlphaFn
    kappa: KappaFn
    n: int


def di_barrier(
    alpha0: float,
    x_max: float,
    alpha: AlphaFn | None = None,
    kappa: KappaFn | None = None,
) -> Barrier:
    """h(x) = -x2 + alpha0 (x_max - x1): velocity-aware position ceiling.

    The gradient (-alpha0, -1) is constant, so gamma_h = sqrt(alpha0^2 + 1)
    exactly and the input channel L_g h = -1 everywhere.
    """
    if alpha0 <= 0:
        raise ValueError("alpha0 must be positive")
    params = np.array([alpha0, x_max])

    def h(x):
        x = np.asarray(x, float)
        return float(-x[1] + alpha0 * (x_max - x[0]))

    def grad_h(x):
        return np.array([-alpha0, -1.0])

    return Barrier(
        name="di_ceiling",
        code=BARRIER_DI,
        params=params,
        h=h,
        grad_h=grad_h,
        gamma_h=float(np.sqrt(alpha0**2 + 1.0)),
        alpha=alpha or AlphaFn("linear", 1.0),
        kappa=kappa or KappaFn("one"),
        n=2,
    )


def quad_barrier(
    center,
    r: float,
    sigma: float = 0.5,
    alpha: AlphaFn | None = None,
    kappa: KappaFn | None = None,
    box_lo=None,
    box_hi=None,
) -> Barrier:
    """Obstacle barrier: distance above r plus scaled radial approach speed.

    h(x) = ||p - center|| - r + sigma * <p - center, v> / ||p - center||
    with p = (x1, x2), v = (x4, x5). Relative degree 1 in the thrust
    channel; maintaining h >= 0 from outside the disk keeps the distance
    above r because any crossing of the circle needs a negative radial
    velocity, which forces h < 0 at the boundary.
    """
    if r <= 0:
        raise ValueError("obstacle radius must be positive")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    cx, cy = float(center[0]), float(center[1])
    params = np.array([cx, cy, r, sigma])

    def h(x):
        x = np.asarray(x, float)
        d1, d2 = x[0] - cx, x[1] - cy
        dist = np.hypot(d1, d2)
        if dist < 1e-9:
            raise BarrierSingularError("barrier singular: state at obstacle center")
        return float(dist - r + sigma * (d1 * x[3] + d2 * x[4]) / dist)

    def grad_h(x):
        x = np.asarray(x, float)
        out = np.zeros(6)
        if quad_barrier_grad(params, x, out) != 0:
            raise BarrierSingularError("barrier singular: state at obstacle center")
        return out

    lo = np.array([-3.0, -2.0, -0.7, -3.0, -3.0, -3.0]) if box_lo is None else np.asarray(box_lo, float)
    hi = np.array([3.0, 2.0, 0.7, 3.0, 3.0, 3.0]) if box_hi is None else np.asarray(box_hi, float)
    rng = np.random.default_rng(0)
    X = rng.uniform(lo, hi, size=(8192, 6))
    d1 = X[:, 0] - cx
    d2 = X[:, 1] - cy
    dist = np.hypot(d1, d2)
    keep = dist >= 0.9 * r
    X, d1, d2, dist = X[keep], d1[keep], d2[keep], dist[keep]
    s = d1 * X[:, 3] + d2 * X[:, 4]
    g1 = d1 / dist + sigma * (X[:, 3] / dist - s * d1 / dist**3)
    g2 = d2 / dist + sigma * (X[:, 4] / dist - s * d2 / dist**3)
    g4 = sigma * d1 / dist
    g5 = sigma * d2 / dist
    worst = float(np.sqrt(g1**2 + g2**2 + g4**2 + g5**2).max())
    return Barrier(
        name="quad_obstacle",
        code=BARRIER_QUAD,
        params=params,
        h=h,
        grad_h=grad_h,
        gamma_h=1.1 * worst,
        alpha=alpha or AlphaFn("linear", 1.0),
        kappa=kappa or KappaFn("one"),
        n=6,
    )


def robust_cbf_row(barrier: Barrier, model, x, d_bar: float | None = None):
    """Robust-CBF condition at a state x as (row, rhs) with row.u >= rhs.

    rhs = -L_f h(x) + kappa(h) ||L_{g_d} h(x)|| d_bar - alpha(h(x)).
    With d_bar = 0 this is the classic CBF constraint.
    """
    x = np.asarray(x, float)
    db = model.d_bar if d_bar is None else float(d_bar)
    grad = barrier.grad_h(x)
    hval = barrier.h(x)
    row = grad @ model.g(x)
    lf = float(grad @ model.f(x))
    lgd = float(np.linalg.norm(grad @ model.g_d))
    rhs = -lf + barrier.kappa(hval) * lgd * db - barrier.alpha(hval)
    return np.atleast_1d(row), float(rhs)


def observer_cbf_row(barrier: Barrier, bound, observer, xhat, y, t: float):
    """Observer-robust CBF condition on the observer vector fields (p, q).

    rhs = -L_p h(xhat, y) - alpha(h(xhat) - gamma_h M(t)) + gamma_h Mdot(t),
    where M is the ISS error bound supplied by `bound`.
    """
    xhat = np.asarray(xhat, float)
    y = np.atleast_1d(np.asarray(y, float))
    grad = barrier.grad_h(xhat)
    hval = barrier.h(xhat)
    m_t = bound.M(t)
    mdot_t = bound.Mdot(t)
    row = grad @ observer.q(xhat, y)
    lp = float(grad @ observer.p(xhat, y))
    rhs = -lp - barrier.alpha(hval - barrier.gamma_h * m_t) + barrier.gamma_h * mdot_t
    return np.atleast_1d(row), float(rhs)


# ---------------------------------------------------------------------------
# hot kernels


@maybe_njit
def alpha_eval(code, gain, r):
    if code == ALPHA_LINEAR:
        return gain * r
    return gain * r * r * r


@maybe_njit
def kappa_eval(code, r):
    if code == KAPPA_ONE:
        return 1.0
    return 2.0 / (1.0 + np.exp(r))


@maybe_njit
def barrier_h(code, params, x):
    if code == BARRIER_DI:
        return -x[1] + params[0] * (params[1] - x[0])
    d1 = x[0] - params[0]
    d2 = x[1] - params[1]
    dist = np.sqrt(d1 * d1 + d2 * d2)
    if dist < 1e-15:
        dist = 1e-15
    return dist - params[2] + params[3] * (d1 * x[3] + d2 * x[4]) / dist


@maybe_njit
def quad_barrier_grad(params, x, out):
    d1 = x[0] - params[0]
    d2 = x[1] - params[1]
    sigma = params[3]
    dist2 = d1 * d1 + d2 * d2
    dist = np.sqrt(dist2)
    if dist < 1e-9:
        return 1
    s = d1 * x[3] + d2 * x[4]
    out[0] = d1 / dist + sigma * (x[3] / dist - s * d1 / (dist2 * dist))
    out[1] = d2 / dist + sigma * (x[4] / dist - s * d2 / (dist2 * dist))
    out[2] = 0.0
    out[3] = sigma * d1 / dist
    out[4] = sigma * d2 / dist
    out[5] = 0.0
    return 0


@maybe_njit
def barrier_grad(code, params, x, out):
    if code == BARRIER_DI:
        out[0] = -params[0]
        out[1] = -1.0
        return 0
    return quad_barrier_grad(params, x, out)
