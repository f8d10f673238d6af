"""Certified bounds over a box enclosure of the estimation-error set.

Given a box guaranteed to contain the true state, `bound_a` lower-bounds
the input-independent part of the robust barrier derivative and `bound_b`
brackets each input channel of L_g h. Soundness is the defining property:
sampled evaluations over the box must never fall outside the certified
values. Affine pieces (double integrator) are bounded exactly by corner
minimization; the quadrotor barrier is bounded by interval arithmetic
through its trigonometric and rational terms.
"""
from dataclasses import dataclass

import numpy as np

from ._jit import maybe_njit
from .barriers import BARRIER_DI, BARRIER_QUAD, Barrier, alpha_eval, kappa_eval
from .errors import ChannelSignError, BarrierSingularError
from .observers import EllipsoidalBound
from .systems import MODEL_DI, MODEL_QUAD, SystemModel


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        if np.any(self.lo > self.hi):
            raise ValueError("box requires lo <= hi componentwise")

    @property
    def half_widths(self) -> np.ndarray:
        return 0.5 * (self.hi - self.lo)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.hi + self.lo)

    @property
    def radius(self) -> float:
        """Largest ||x - center|| over the box (corner distance)."""
        return float(np.linalg.norm(self.half_widths))

    def contains(self, x, tol: float = 1e-12) -> bool:
        x = np.asarray(x, float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def sample(self, k: int, rng) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(k, len(self.lo)))


@dataclass(frozen=True)
class ChannelBounds:
    b_minus: np.ndarray
    b_plus: np.ndarray

    def __post_init__(self):
        if np.any(self.b_minus > self.b_plus + 1e-15):
            raise ValueError("channel bounds require b_minus <= b_plus")


def box_enclosure(e: EllipsoidalBound) -> Box:
    """Axis-aligned box containing {x : (x-c)' shape^{-1} (x-c) <= level}."""
    hw = np.sqrt(np.maximum(e.level * np.diag(e.shape), 0.0))
    return Box(lo=e.center - hw, hi=e.center + hw)


def bound_a(barrier: Barrier, model: SystemModel, t: float, xhat, box: Box) -> float:
    """Certified lower bound over the box of
    L_f h(x) - kappa(h(x)) ||L_{g_d} h(x)|| w_bar + alpha(h(x))."""
    xhat = np.asarray(xhat, float)
    if barrier.code == BARRIER_DI and model.code == MODEL_DI:
        lgd = float(np.linalg.norm(barrier.grad_h(xhat) @ model.g_d))
        return float(
            di_bound_a_kernel(
                barrier.params, lgd, barrier.alpha.code, barrier.alpha.gain,
                barrier.kappa.code, model.w_bar, box.lo, box.hi,
            )
        )
    if barrier.code == BARRIER_QUAD and model.code == MODEL_QUAD:
        flag, a = quad_bound_a_kernel(
            barrier.params, model.params, barrier.alpha.code, barrier.alpha.gain,
            barrier.kappa.code, model.w_bar, box.lo, box.hi,
        )
        if flag != 0:
            raise BarrierSingularError("barrier singular: box reaches obstacle center")
        return float(a)
    raise ValueError(f"no bound rule for barrier {barrier.name} on model {model.name}")


def bound_b(barrier: Barrier, model: SystemModel, t: float, xhat, box: Box) -> ChannelBounds:
    """Certified per-channel interval bounds on [L_g h(x)]_i over the box.

    Raises ChannelSignError when a channel interval strictly contains 0.
    """
    if barrier.code == BARRIER_DI and model.code == MODEL_DI:
        val = (barrier.grad_h(np.asarray(xhat, float)) @ model.g(np.zeros(model.n))).item()
        bm = np.array([val])
        bp = np.array([val])
    elif barrier.code == BARRIER_QUAD and model.code == MODEL_QUAD:
        bm = np.zeros(2)
        bp = np.zeros(2)
        flag = quad_bound_b_kernel(barrier.params, model.params, box.lo, box.hi, bm, bp)
        if flag != 0:
            raise BarrierSingularError("barrier singular: box reaches obstacle center")
    else:
        raise ValueError(f"no bound rule for barrier {barrier.name} on model {model.name}")
    for i in range(len(bm)):
        if bm[i] < -1e-12 and bp[i] > 1e-12:
            raise ChannelSignError(i, float(bm[i]), float(bp[i]))
    return ChannelBounds(b_minus=bm, b_plus=bp)


# ---------------------------------------------------------------------------
# interval primitives (hot kernels; intervals are (lo, hi) scalar pairs)

_TWO_PI = 2.0 * np.pi
_HALF_PI = 0.5 * np.pi


@maybe_njit
def _imul(alo, ahi, blo, bhi):
    p1 = alo * blo
    p2 = alo * bhi
    p3 = ahi * blo
    p4 = ahi * bhi
    return min(min(p1, p2), min(p3, p4)), max(max(p1, p2), max(p3, p4))


@maybe_njit
def _isq(alo, ahi):
    if alo >= 0.0:
        return alo * alo, ahi * ahi
    if ahi <= 0.0:
        return ahi * ahi, alo * alo
    m = max(-alo, ahi)
    return 0.0, m * m


@maybe_njit
def _idiv_pos(alo, ahi, blo, bhi):
    """a / b for an interval b with blo > 0."""
    q1 = alo / blo
    q2 = alo / bhi
    q3 = ahi / blo
    q4 = ahi / bhi
    return min(min(q1, q2), min(q3, q4)), max(max(q1, q2), max(q3, q4))


@maybe_njit
def _isin(alo, ahi):
    if ahi - alo >= _TWO_PI:
        return -1.0, 1.0
    slo = np.sin(alo)
    shi = np.sin(ahi)
    lo = min(slo, shi)
    hi = max(slo, shi)
    k = np.ceil((alo - _HALF_PI) / _TWO_PI)
    if _HALF_PI + _TWO_PI * k <= ahi:
        hi = 1.0
    k = np.ceil((alo + _HALF_PI) / _TWO_PI)
    if -_HALF_PI + _TWO_PI * k <= ahi:
        lo = -1.0
    return lo, hi


@maybe_njit
def _icos(alo, ahi):
    return _isin(alo + _HALF_PI, ahi + _HALF_PI)


# ---------------------------------------------------------------------------
# model/barrier specific bound kernels


@maybe_njit
def di_bound_a_kernel(bp, lgd, alpha_code, alpha_gain, kappa_code, wbar, lo, hi):
    """Exact affine corner minimum plus a monotone kappa/alpha treatment.

    h and L_f h are affine for the ceiling barrier, so the linear-alpha case
    is minimized exactly at a box corner.
    """
    alpha0 = bp[0]
    x_max = bp[1]
    xm0 = 0.5 * (lo[0] + hi[0])
    xm1 = 0.5 * (lo[1] + hi[1])
    hw0 = 0.5 * (hi[0] - lo[0])
    hw1 = 0.5 * (hi[1] - lo[1])
    # h = -alpha0 x1 - x2 + alpha0 x_max;   L_f h = -alpha0 x2
    h_mid = -alpha0 * xm0 - xm1 + alpha0 * x_max
    h_lo = h_mid - (alpha0 * hw0 + hw1)
    if alpha_code == 0:
        c0 = -alpha_gain * alpha0
        c1 = -alpha0 - alpha_gain
        base = c0 * xm0 + c1 * xm1 + alpha_gain * alpha0 * x_max
        base -= abs(c0) * hw0 + abs(c1) * hw1
    else:
        base = -alpha0 * xm1 - alpha0 * hw1
        base += alpha_eval(alpha_code, alpha_gain, h_lo)
    if wbar > 0.0 and lgd > 0.0:
        base -= kappa_eval(kappa_code, h_lo) * lgd * wbar
    return base


@maybe_njit
def _quad_core_intervals(bp, lo, hi):
    """Shared intervals for the quadrotor barrier over a box.

    Returns (flag, D interval, S interval, h interval, d2 interval).
    """
    cx = bp[0]
    cy = bp[1]
    r = bp[2]
    sigma = bp[3]
    d1l, d1h = lo[0] - cx, hi[0] - cx
    d2l, d2h = lo[1] - cy, hi[1] - cy
    sq1l, sq1h = _isq(d1l, d1h)
    sq2l, sq2h = _isq(d2l, d2h)
    dd_l, dd_h = sq1l + sq2l, sq1h + sq2h
    if dd_l <= 1e-18:
        return 1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, d2l, d2h
    dl, dh = np.sqrt(dd_l), np.sqrt(dd_h)
    p1l, p1h = _imul(d1l, d1h, lo[3], hi[3])
    p2l, p2h = _imul(d2l, d2h, lo[4], hi[4])
    sl, sh = p1l + p2l, p1h + p2h
    sdl, sdh = _idiv_pos(sl, sh, dl, dh)
    hl = dl - r + sigma * sdl
    hh = dh - r + sigma * sdh
    return 0, dl, dh, sl, sh, hl, hh, d2l, d2h


@maybe_njit
def quad_bound_a_kernel(bp, mp, alpha_code, alpha_gain, kappa_code, wbar, lo, hi):
    sigma = bp[3]
    grav = mp[2]
    flag, dl, dh, sl, sh, hl, hh, d2l, d2h = _quad_core_intervals(bp, lo, hi)
    if flag != 0:
        return 1, 0.0
    # L_f h = S/D + sigma (v1^2 + v2^2 - g d2)/D - sigma S^2/D^3
    t1l, t1h = _idiv_pos(sl, sh, dl, dh)
    v1l, v1h = _isq(lo[3], hi[3])
    v2l, v2h = _isq(lo[4], hi[4])
    inl = v1l + v2l - grav * d2h
    inh = v1h + v2h - grav * d2l
    t2l, t2h = _idiv_pos(inl, inh, dl, dh)
    s2l, s2h = _isq(sl, sh)
    d3l = dl * dl * dl
    d3h = dh * dh * dh
    t3l, t3h = _idiv_pos(s2l, s2h, d3l, d3h)
    lf_lo = t1l + sigma * t2l - sigma * t3h
    a = lf_lo + alpha_eval(alpha_code, alpha_gain, hl)
    if wbar > 0.0:
        a -= kappa_eval(kappa_code, hl) * sigma * wbar
    return 0, a


@maybe_njit
def quad_bound_b_kernel(bp, mp, lo, hi, bm, bp_out):
    """[L_g h]_1 = (sigma/m) (d1 sin x3 + d2 cos x3)/D; [L_g h]_2 = 0."""
    cx = bp[0]
    cy = bp[1]
    sigma = bp[3]
    mass = mp[0]
    d1l, d1h = lo[0] - cx, hi[0] - cx
    d2l, d2h = lo[1] - cy, hi[1] - cy
    sq1l, sq1h = _isq(d1l, d1h)
    sq2l, sq2h = _isq(d2l, d2h)
    dd_l, dd_h = sq1l + sq2l, sq1h + sq2h
    if dd_l <= 1e-18:
        return 1
    dl, dh = np.sqrt(dd_l), np.sqrt(dd_h)
    snl, snh = _isin(lo[2], hi[2])
    csl, csh = _icos(lo[2], hi[2])
    m1l, m1h = _imul(d1l, d1h, snl, snh)
    m2l, m2h = _imul(d2l, d2h, csl, csh)
    numl, numh = m1l + m2l, m1h + m2h
    ql, qh = _idiv_pos(numl, numh, dl, dh)
    bm[0] = sigma / mass * ql
    bp_out[0] = sigma / mass * qh
    bm[1] = 0.0
    bp_out[1] = 0.0
    return 0
