"""Control-affine system models with disturbance channels.

Two concrete plants are provided: a double integrator with position
measurement, and a planar quadrotor (thrust + torque inputs, position and
pitch measured). The per-model dynamics kernels at the bottom are the hot
path shared by the simulator; the SystemModel dataclass wraps them with
plain callables for everything else.
"""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._jit import maybe_njit

MODEL_DI = 0
MODEL_QUAD = 1

DIST_ZERO = 0
DIST_CONST = 1
DIST_SIN = 2
DIST_PWC = 3

_DIST_KINDS = {
    "zero": DIST_ZERO,
    "constant_direction": DIST_CONST,
    "sinusoidal": DIST_SIN,
    "piecewise_constant_random": DIST_PWC,
}


@dataclass(frozen=True)
class SystemModel:
    """Tuple (f, g, g_d, c, c_d) with dimensions and disturbance bounds."""

    name: str
    code: int
    n: int
    m: int
    n_y: int
    n_d: int
    n_v: int
    f: Callable
    g: Callable
    c: Callable
    g_d: np.ndarray  # constant n x n_d
    c_d: np.ndarray  # constant n_y x n_v
    C: np.ndarray  # measurement map is linear for both plants: c(x) = C x
    d_bar: float
    v_bar: float
    params: np.ndarray
    box_lo: np.ndarray
    box_hi: np.ndarray
    lipschitz_constants: dict = field(default_factory=dict)
    v_channel_bounds: np.ndarray | None = None
    plot_axes: tuple = (0, 1)

    def __post_init__(self):
        if self.d_bar < 0 or self.v_bar < 0:
            raise ValueError("disturbance bounds must be nonnegative")

    @property
    def w_bar(self) -> float:
        return max(self.d_bar, self.v_bar)


def eval_closed_loop(model: SystemModel, x, u, d=None, t: float = 0.0):
    """xdot = f(x) + g(x) u + g_d d for the closed-loop plant."""
    x = np.asarray(x, float)
    u = np.atleast_1d(np.asarray(u, float))
    if x.shape != (model.n,):
        raise ValueError(f"state must have shape ({model.n},)")
    if u.shape != (model.m,):
        raise ValueError(f"input must have shape ({model.m},)")
    xdot = model.f(x) + model.g(x) @ u
    if d is not None:
        d = np.atleast_1d(np.asarray(d, float))
        if d.shape != (model.n_d,):
            raise ValueError(f"disturbance must have shape ({model.n_d},)")
        if np.linalg.norm(d) > model.d_bar + 1e-12:
            raise ValueError("disturbance exceeds declared bound")
        xdot = xdot + model.g_d @ d
    return xdot


def _sampled_lipschitz(fn_jac, lo, hi, n_samples: int = 4096, seed: int = 0) -> float:
    """Sampled supremum of a Jacobian norm over the operating box, +10%."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(n_samples, len(lo)))
    worst = 0.0
    for p in pts:
        worst = max(worst, float(np.linalg.norm(fn_jac(p), 2)))
    return 1.1 * worst


def double_integrator(d_bar: float = 0.0, v_bar: float = 0.0) -> SystemModel:
    """xdot1 = x2, xdot2 = u, y = x1.

    Undisturbed by default (d_bar = v_bar = 0); overriding the bounds
    enables the matched disturbance channel g_d = [0, 1]' and measurement
    channel c_d = [1] for robustness stress runs.
    """
    params = np.zeros(0)

    def f(x):
        return di_f(np.asarray(x, float))

    def g(x):
        return np.array([[0.0], [1.0]])

    def c(x):
        return np.array([x[0]])

    lo = np.array([-5.0, -5.0])
    hi = np.array([5.0, 5.0])
    return SystemModel(
        name="double_integrator",
        code=MODEL_DI,
        n=2,
        m=1,
        n_y=1,
        n_d=1,
        n_v=1,
        f=f,
        g=g,
        c=c,
        g_d=np.array([[0.0], [1.0]]),
        c_d=np.array([[1.0]]),
        C=np.array([[1.0, 0.0]]),
        d_bar=float(d_bar),
        v_bar=float(v_bar),
        params=params,
        box_lo=lo,
        box_hi=hi,
        lipschitz_constants={"gamma_f": 1.0, "gamma_g": 0.0},
    )


def planar_quadrotor(
    mass: float = 1.0,
    inertia: float = 0.25,
    gravity: float = 9.81,
    d_bar: float = 2.0,
    position_noise: float = 0.05,
    pitch_noise: float = np.deg2rad(5.0),
) -> SystemModel:
    """Planar quadrotor: positions (x1, x2), pitch x3, velocities (x4, x5, x6).

    Thrust u1 acts along the body axis (sin x3, cos x3)/m, torque u2 drives
    the pitch rate. Accelerations carry the wind disturbance d (||d|| <=
    d_bar); positions and pitch are measured with per-channel noise bounds.
    """
    params = np.array([mass, inertia, gravity])
    chan = np.array([position_noise, position_noise, pitch_noise])
    v_bar = float(np.linalg.norm(chan))
    c_d = np.diag(chan / v_bar)

    def f(x):
        return quad_f(params, np.asarray(x, float))

    def g(x):
        return quad_g(params, np.asarray(x, float))

    def c(x):
        return np.asarray(x, float)[:3].copy()

    g_d = np.zeros((6, 2))
    g_d[3, 0] = 1.0
    g_d[4, 1] = 1.0
    C = np.zeros((3, 6))
    C[0, 0] = C[1, 1] = C[2, 2] = 1.0
    lo = np.array([-3.0, -2.0, -0.7, -3.0, -3.0, -3.0])
    hi = np.array([3.0, 2.0, 0.7, 3.0, 3.0, 3.0])

    def jac_f(x):
        J = np.zeros((6, 6))
        J[0, 3] = J[1, 4] = J[2, 5] = 1.0
        return J

    model = SystemModel(
        name="planar_quadrotor",
        code=MODEL_QUAD,
        n=6,
        m=2,
        n_y=3,
        n_d=2,
        n_v=3,
        f=f,
        g=g,
        c=c,
        g_d=g_d,
        c_d=c_d,
        C=C,
        d_bar=float(d_bar),
        v_bar=v_bar,
        params=params,
        box_lo=lo,
        box_hi=hi,
        v_channel_bounds=chan,
    )
    model.lipschitz_constants["gamma_f"] = _sampled_lipschitz(jac_f, lo, hi, 64)
    model.lipschitz_constants["gamma_g"] = 1.1 / mass
    return model


@dataclass(frozen=True)
class DisturbanceSignal:
    """Bounded disturbance waveform; ||signal(t)|| <= magnitude by construction."""

    kind: str
    dim: int
    magnitude: float = 0.0
    direction: np.ndarray | None = None
    frequency: float = 1.0
    phase: float = 0.0
    dwell: float = 0.1
    seed: int = 0
    table: np.ndarray = field(default_factory=lambda: np.zeros((1, 1)))
    code: int = DIST_ZERO

    def __call__(self, t: float) -> np.ndarray:
        out = np.zeros(self.dim)
        dist_eval(
            self.code,
            self.direction if self.direction is not None else np.zeros(self.dim),
            self.magnitude,
            self.frequency,
            self.phase,
            self.dwell,
            self.table,
            float(t),
            out,
        )
        return out


def make_disturbance(
    kind: str,
    dim: int,
    bound: float,
    magnitude: float | None = None,
    direction=None,
    frequency: float = 1.0,
    phase: float = 0.0,
    dwell: float = 0.1,
    seed: int = 0,
    horizon: float = 20.0,
) -> DisturbanceSignal:
    """Build a DisturbanceSignal; magnitude defaults to the bound itself."""
    if kind not in _DIST_KINDS:
        raise ValueError(f"unknown disturbance kind '{kind}'")
    mag = bound if magnitude is None else float(magnitude)
    if mag < 0 or mag > bound + 1e-12:
        raise ValueError("magnitude must lie in [0, bound]")
    code = _DIST_KINDS[kind]
    dirvec = np.zeros(dim)
    table = np.zeros((1, dim))
    if kind == "constant_direction" or kind == "sinusoidal":
        d = np.asarray(
            direction if direction is not None else np.eye(dim)[0], float
        )
        if d.shape != (dim,):
            raise ValueError(f"direction must have {dim} components")
        nrm = np.linalg.norm(d)
        if nrm == 0.0:
            raise ValueError("direction must be nonzero")
        dirvec = d / nrm
    elif kind == "piecewise_constant_random":
        rng = np.random.default_rng(seed)
        n_dwell = int(np.ceil(horizon / dwell)) + 2
        raw = rng.normal(size=(n_dwell, dim))
        norms = np.linalg.norm(raw, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        table = raw / norms * mag
    return DisturbanceSignal(
        kind=kind,
        dim=dim,
        magnitude=mag,
        direction=dirvec,
        frequency=frequency,
        phase=phase,
        dwell=dwell,
        seed=seed,
        table=table,
        code=code,
    )


# ---------------------------------------------------------------------------
# hot kernels


@maybe_njit
def di_f(x):
    out = np.empty(2)
    out[0] = x[1]
    out[1] = 0.0
    return out


@maybe_njit
def quad_f(params, x):
    grav = params[2]
    out = np.empty(6)
    out[0] = x[3]
    out[1] = x[4]
    out[2] = x[5]
    out[3] = 0.0
    out[4] = -grav
    out[5] = 0.0
    return out


@maybe_njit
def quad_g(params, x):
    mass = params[0]
    inertia = params[1]
    out = np.zeros((6, 2))
    out[3, 0] = np.sin(x[2]) / mass
    out[4, 0] = np.cos(x[2]) / mass
    out[5, 1] = 1.0 / inertia
    return out


@maybe_njit
def model_f(code, params, x, out):
    if code == MODEL_DI:
        out[0] = x[1]
        out[1] = 0.0
    else:
        grav = params[2]
        out[0] = x[3]
        out[1] = x[4]
        out[2] = x[5]
        out[3] = 0.0
        out[4] = -grav
        out[5] = 0.0


@maybe_njit
def model_g(code, params, x, out):
    if code == MODEL_DI:
        out[0, 0] = 0.0
        out[1, 0] = 1.0
    else:
        mass = params[0]
        inertia = params[1]
        for i in range(6):
            out[i, 0] = 0.0
            out[i, 1] = 0.0
        out[3, 0] = np.sin(x[2]) / mass
        out[4, 0] = np.cos(x[2]) / mass
        out[5, 1] = 1.0 / inertia


@maybe_njit
def model_jac(code, params, x, u, out):
    """Jacobian of f(x) + g(x) u with respect to x."""
    n = out.shape[0]
    for i in range(n):
        for j in range(n):
            out[i, j] = 0.0
    if code == MODEL_DI:
        out[0, 1] = 1.0
    else:
        mass = params[0]
        out[0, 3] = 1.0
        out[1, 4] = 1.0
        out[2, 5] = 1.0
        out[3, 2] = u[0] * np.cos(x[2]) / mass
        out[4, 2] = -u[0] * np.sin(x[2]) / mass


@maybe_njit
def dist_eval(code, direction, magnitude, frequency, phase, dwell, table, t, out):
    dim = out.shape[0]
    if code == DIST_ZERO:
        for i in range(dim):
            out[i] = 0.0
    elif code == DIST_CONST:
        for i in range(dim):
            out[i] = magnitude * direction[i]
    elif code == DIST_SIN:
        s = magnitude * np.sin(frequency * t + phase)
        for i in range(dim):
            out[i] = s * direction[i]
    else:
        k = int(t / dwell)
        last = table.shape[0] - 1
        if k > last:
            k = last
        if k < 0:
            k = 0
        for i in range(dim):
            out[i] = table[k, i]
