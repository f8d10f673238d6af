import numpy as np
import pytest

from obsafe.errors import ObserverBoundError
from obsafe.observers import (
    DekfObserver,
    IssBound,
    LuenbergerObserver,
    iss_as_ellipsoid,
    luenberger_design,
    observer_step,
)
from obsafe.systems import double_integrator, planar_quadrotor

A_DI = np.array([[0.0, 1.0], [0.0, 0.0]])
B_DI = np.array([[0.0], [1.0]])
C_DI = np.array([[1.0, 0.0]])


@pytest.mark.parametrize("theta,expect", [(1.0, (2.0, 2.0)), (2.0, (4.0, 8.0))])
def test_luenberger_gain_closed_form(theta, expect):
    obs = LuenbergerObserver(A_DI, B_DI, C_DI, theta=theta, delta=1.0)
    assert np.allclose(obs.L.ravel(), expect, atol=1e-9)
    # inverse consistency: P L = C'/2
    assert np.allclose(obs.P @ obs.L, 0.5 * C_DI.T, atol=1e-12)


def test_luenberger_decay_rate_invariant():
    for theta in (0.5, 1.0, 3.0):
        obs = LuenbergerObserver(A_DI, B_DI, C_DI, theta=theta, delta=1.0)
        eigs = np.linalg.eigvals(obs.A - obs.L @ obs.C)
        assert np.max(eigs.real) <= -theta + 1e-9


def test_iss_bound_starts_above_delta():
    obs = LuenbergerObserver(A_DI, B_DI, C_DI, theta=1.0, delta=0.3)
    bound = obs.iss_bound()
    assert bound.M(0.0) >= 0.3
    assert bound.cond_sqrt >= 1.0


def test_iss_bound_monotone_and_floor():
    ts = np.linspace(0.0, 8.0, 200)
    clean = IssBound(cond_sqrt=2.0, delta=0.5, theta=1.0, omega_bar=0.0)
    ms = np.array([clean.M(t) for t in ts])
    assert np.all(np.diff(ms) <= 1e-12)
    assert all(clean.Mdot(t) <= 0 for t in ts)
    noisy = IssBound(cond_sqrt=2.0, delta=0.5, theta=1.0, omega_bar=0.2)
    ms = np.array([noisy.M(t) for t in ts])
    assert np.all(np.diff(ms) <= 1e-12)
    assert ms.min() >= 2.0 * 0.2 / 1.0 - 1e-12  # strictly positive floor


def test_luenberger_zero_innovation_fixed_point():
    obs = LuenbergerObserver(np.zeros((2, 2)), B_DI, np.eye(2), theta=1.0, delta=1.0,
                             xhat0=[0.7, -0.3])
    y = obs.C @ obs.xhat
    xh = obs.step(y, np.zeros(1), dt=0.01)
    assert np.allclose(xh, [0.7, -0.3], atol=1e-14)


def test_luenberger_error_within_iss_bound():
    # x(0) = (1, 0), xhat(0) = 0, u = 0: plant state is constant, the
    # estimate converges and the error must stay below M(t) throughout.
    model = double_integrator()
    obs = luenberger_design(model, theta=1.0, delta=1.0, xhat0=[0.0, 0.0])
    bound = obs.iss_bound()
    x = np.array([1.0, 0.0])
    dt = 1e-3
    u = np.zeros(1)
    for k in range(5000):
        t = k * dt
        err = np.linalg.norm(x - obs.xhat)
        assert err <= bound.M(t) + 1e-9
        y = model.c(x)
        obs.step(y, u, dt)


def test_luenberger_bound_levels():
    obs = LuenbergerObserver(A_DI, B_DI, C_DI, theta=1.0, delta=1.0)
    assert np.isclose(obs.be_level(0.0), obs.lam_max)
    assert obs.be_level(20.0) < 1e-16
    e = obs.current_bound(0.0)
    # shape^{-1} = P convention
    assert np.allclose(np.linalg.inv(e.shape), obs.P, atol=1e-9)


def test_dekf_zero_noise_keeps_v_zero():
    model = double_integrator()  # d_bar = v_bar = 0
    obs = DekfObserver(model, Q=0.1 * np.eye(2), R=np.array([[0.05]]),
                       theta=0.5, P0=np.eye(2), V0=0.0, xhat0=[0.0, 0.0])
    for _ in range(200):
        obs.step(np.zeros(1), np.zeros(1), 1e-3)
    assert obs.V <= 1e-12


def test_dekf_symmetry_preserved():
    model = planar_quadrotor()
    obs = DekfObserver(model, Q=0.1 * np.eye(6), R=np.diag([0.01, 0.01, 0.02]),
                       theta=0.5, P0=0.1 * np.eye(6), V0=1.0,
                       xhat0=np.zeros(6))
    u = np.array([9.81, 0.0])
    y = np.zeros(3)
    for _ in range(100):
        obs.step(y, u, 1e-3)
        assert np.max(np.abs(obs.P - obs.P.T)) <= 1e-9
    w = np.linalg.eigvalsh(obs.P)
    assert w.min() > 0


def test_dekf_initial_set_is_current_bound():
    model = planar_quadrotor()
    obs = DekfObserver(model, Q=np.eye(6), R=np.eye(3), theta=0.3,
                       P0=0.2 * np.eye(6), V0=2.0, xhat0=np.zeros(6))
    e0 = obs.current_bound(0.0)
    assert np.allclose(e0.shape, 0.2 * np.eye(6))
    assert e0.level == 2.0


def test_dekf_p_band_violation_raises():
    model = double_integrator()
    with pytest.raises(ObserverBoundError):
        DekfObserver(model, Q=np.eye(2), R=np.array([[1.0]]), theta=0.5,
                     P0=np.eye(2), V0=0.0, p_lo=10.0, p_hi=100.0)


def test_observer_step_functional_matches_method():
    model = double_integrator()
    obs = luenberger_design(model, theta=1.0, delta=0.5, xhat0=[0.2, 0.1])
    y = np.array([0.4])
    u = np.array([0.3])
    pure = observer_step(obs, obs.xhat, y, u, 1e-2)
    assert np.allclose(pure, obs.step(y, u, 1e-2))


def test_iss_as_ellipsoid_same_verdicts():
    bound = IssBound(cond_sqrt=2.618, delta=0.4, theta=1.0)
    center = np.array([0.3, -0.2])
    rng = np.random.default_rng(5)
    for t in (0.0, 0.7, 2.5):
        ell = iss_as_ellipsoid(bound, t, center)
        pts = center + rng.normal(scale=bound.M(t), size=(1000, 2))
        for x in pts:
            norm_ok = np.linalg.norm(x - center) <= bound.M(t)
            assert ell.contains(x, tol=0.0) == norm_ok
