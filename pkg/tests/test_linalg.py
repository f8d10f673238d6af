import numpy as np
import pytest

from obsafe.errors import ControlDesignError, ObserverDesignError
from obsafe.linalg import (
    care_residual,
    is_observable,
    is_stabilizable,
    lyapunov_residual,
    solve_care,
    solve_lyapunov,
)

A_DI = np.array([[0.0, 1.0], [0.0, 0.0]])
C_DI = np.array([[1.0, 0.0]])


def test_lyapunov_zero_drift_identity():
    # A = 0: equation reduces to 2*theta*P = C'C.
    P = solve_lyapunov(np.zeros((2, 2)), np.eye(2), theta=0.5)
    assert np.allclose(P, np.eye(2), atol=1e-12)


def test_lyapunov_double_integrator_hand_solution():
    P = solve_lyapunov(A_DI, C_DI, theta=1.0)
    assert np.allclose(P, [[0.5, -0.25], [-0.25, 0.25]], atol=1e-10)
    assert lyapunov_residual(A_DI, C_DI, 1.0, P) <= 1e-9


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_lyapunov_double_integrator_closed_form(theta):
    P = solve_lyapunov(A_DI, C_DI, theta=theta)
    expect = np.array(
        [
            [1.0 / (2 * theta), -1.0 / (4 * theta**2)],
            [-1.0 / (4 * theta**2), 1.0 / (4 * theta**3)],
        ]
    )
    assert np.allclose(P, expect, atol=1e-12)
    assert lyapunov_residual(A_DI, C_DI, theta, P) <= 1e-12
    w = np.linalg.eigvalsh(P)
    assert w.min() > 0


def test_lyapunov_unobservable_pair_rejected():
    # C = [0, 1] sees only the integrator output chain reversed: (A+I, C)
    # loses rank for A with a decoupled first state.
    A = np.diag([1.0, 1.0])
    C = np.array([[1.0, 0.0]])
    assert not is_observable(A + np.eye(2), C)
    with pytest.raises(ObserverDesignError):
        solve_lyapunov(A, C, theta=1.0)


def test_care_double_integrator_hand_solution():
    B = np.array([[0.0], [1.0]])
    P, K = solve_care(A_DI, B, np.eye(2), np.array([[1.0]]))
    s3 = np.sqrt(3.0)
    assert np.allclose(P, [[s3, 1.0], [1.0, s3]], atol=1e-9)
    assert np.allclose(K, [[1.0, s3]], atol=1e-9)
    assert care_residual(A_DI, B, np.eye(2), np.array([[1.0]]), P) <= 1e-8


def test_care_no_control_limit():
    # B = 0 with Hurwitz A: reduces to the Lyapunov equation, P = I/2, K = 0.
    A = -np.eye(2)
    B = np.zeros((2, 1))
    P, K = solve_care(A, B, np.eye(2), np.array([[1.0]]))
    assert np.allclose(P, 0.5 * np.eye(2), atol=1e-10)
    assert np.allclose(K, 0.0)


def test_care_rejects_unstabilizable():
    A = np.diag([1.0, -1.0])
    B = np.array([[0.0], [1.0]])  # unstable mode unreachable
    assert not is_stabilizable(A, B)
    with pytest.raises(ControlDesignError):
        solve_care(A, B, np.eye(2), np.array([[1.0]]))


def test_care_random_systems_closed_loop_hurwitz():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 3))
        A = rng.normal(size=(n, n))
        B = rng.normal(size=(n, m))
        Q = np.eye(n)
        R = np.eye(m)
        P, K = solve_care(A, B, Q, R)
        assert care_residual(A, B, Q, R, P) <= 1e-8
        assert np.max(np.linalg.eigvals(A - B @ K).real) < 0
        assert np.linalg.eigvalsh(P).min() > 0
