import numpy as np
import pytest

from obsafe.systems import (
    DisturbanceSignal,
    double_integrator,
    eval_closed_loop,
    make_disturbance,
    planar_quadrotor,
)


def test_double_integrator_fields():
    m = double_integrator()
    assert (m.n, m.m, m.n_y) == (2, 1, 1)
    assert m.d_bar == 0.0 and m.v_bar == 0.0
    assert np.allclose(m.f(np.array([1.0, 2.0])), [2.0, 0.0])
    assert np.allclose(m.g(np.zeros(2)), [[0.0], [1.0]])
    assert m.c(np.array([1.0, 2.0]))[0] == 1.0
    assert np.allclose(m.f(np.zeros(2)), 0.0)


def test_double_integrator_closed_loop():
    m = double_integrator()
    xdot = eval_closed_loop(m, np.array([0.0, 1.0]), np.array([-1.0]))
    assert np.allclose(xdot, [1.0, -1.0])
    assert np.allclose(eval_closed_loop(m, np.zeros(2), np.zeros(1)), 0.0)


def test_quadrotor_hover_equilibrium():
    m = planar_quadrotor()
    assert (m.n, m.m, m.n_y) == (6, 2, 3)
    u_hover = np.array([1.0 * 9.81, 0.0])
    xdot = eval_closed_loop(m, np.zeros(6), u_hover)
    assert np.allclose(xdot, 0.0, atol=1e-12)


def test_quadrotor_tilted_thrust():
    m = planar_quadrotor()
    x = np.zeros(6)
    x[2] = np.pi / 2
    acc = m.g(x) @ np.array([1.0, 0.0])
    assert np.allclose(acc[3:5], [1.0, 0.0], atol=1e-12)


def test_quadrotor_measurement_map():
    m = planar_quadrotor()
    x = np.arange(6.0)
    assert np.allclose(m.c(x), x[:3])
    assert np.allclose(m.C @ x, x[:3])


def test_quadrotor_disturbance_channel():
    m = planar_quadrotor()
    x = np.zeros(6)
    u_hover = np.array([9.81, 0.0])
    xdot = eval_closed_loop(m, x, u_hover, d=np.array([2.0, 0.0]))
    assert np.isclose(xdot[3], 2.0)


def test_thrust_direction_is_unit():
    m = planar_quadrotor()
    for x3 in np.linspace(-np.pi, np.pi, 101):
        x = np.zeros(6)
        x[2] = x3
        col = m.g(x)[:, 0]
        assert np.isclose(np.linalg.norm(col) * m.params[0], 1.0, atol=1e-12)


def test_dimension_mismatch_rejected():
    m = double_integrator()
    with pytest.raises(ValueError):
        eval_closed_loop(m, np.zeros(3), np.zeros(1))
    with pytest.raises(ValueError):
        eval_closed_loop(m, np.zeros(2), np.zeros(2))


def test_model_evaluations_deterministic():
    m = planar_quadrotor()
    x = np.array([0.3, -0.2, 0.1, 1.0, -1.0, 0.5])
    a = m.f(x).tobytes() + m.g(x).tobytes()
    b = m.f(x).tobytes() + m.g(x).tobytes()
    assert a == b


@pytest.mark.parametrize(
    "kind,kwargs",
    [
        ("zero", {}),
        ("constant_direction", {"direction": [3.0, 4.0]}),
        ("sinusoidal", {"direction": [1.0, 1.0], "frequency": 7.0}),
        ("piecewise_constant_random", {"seed": 11, "dwell": 0.1}),
    ],
)
def test_disturbance_never_exceeds_bound(kind, kwargs):
    sig = make_disturbance(kind, dim=2, bound=2.0, **kwargs)
    ts = np.linspace(0.0, 20.0, 100_000)
    worst = max(np.linalg.norm(sig(t)) for t in ts)
    assert worst <= 2.0 + 1e-12


def test_disturbance_magnitude_validated():
    with pytest.raises(ValueError):
        make_disturbance("constant_direction", dim=1, bound=1.0, magnitude=2.0)
    with pytest.raises(ValueError):
        make_disturbance("spiky", dim=1, bound=1.0)


def test_piecewise_constant_deterministic_given_seed():
    a = make_disturbance("piecewise_constant_random", dim=3, bound=1.5, seed=4)
    b = make_disturbance("piecewise_constant_random", dim=3, bound=1.5, seed=4)
    assert a.table.tobytes() == b.table.tobytes()
    assert isinstance(a, DisturbanceSignal)
