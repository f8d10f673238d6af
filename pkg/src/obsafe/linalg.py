"""Lyapunov and Riccati solves used by observer and LQR design.

These run once per scenario at design time, so they stay plain numpy.
Small-n continuous Lyapunov equations are solved exactly through the
Kronecker-vectorized linear system; the CARE is solved by Newton-Kleinman
iteration started from a Bass-style stabilizing gain, and every result is
residual-verified before it is returned.
"""
import numpy as np

from .errors import ControlDesignError, ObserverDesignError


def observability_matrix(A: np.ndarray, C: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    C = np.atleast_2d(C)
    blocks = [C]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def is_observable(A: np.ndarray, C: np.ndarray, tol: float = 1e-10) -> bool:
    O = observability_matrix(A, C)
    sv = np.linalg.svd(O, compute_uv=False)
    return bool(sv.min() > tol * max(1.0, sv.max()))


def is_stabilizable(A: np.ndarray, B: np.ndarray, tol: float = 1e-9) -> bool:
    """PBH test on every eigenvalue with nonnegative real part."""
    n = A.shape[0]
    B = B.reshape(n, -1)
    for lam in np.linalg.eigvals(A):
        if lam.real >= -tol:
            M = np.hstack([A - lam * np.eye(n), B.astype(complex)])
            sv = np.linalg.svd(M, compute_uv=False)
            if sv.min() <= tol * max(1.0, sv.max()):
                return False
    return True


def is_controllable(A: np.ndarray, B: np.ndarray, tol: float = 1e-10) -> bool:
    n = A.shape[0]
    B = B.reshape(n, -1)
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    sv = np.linalg.svd(np.hstack(blocks), compute_uv=False)
    return bool(sv.min() > tol * max(1.0, sv.max()))


def lyap_ct(A: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Solve A'X + XA = W for symmetric W (row-major Kronecker vectorization)."""
    n = A.shape[0]
    eye = np.eye(n)
    M = np.kron(A.T, eye) + np.kron(eye, A.T)
    X = np.linalg.solve(M, W.reshape(-1)).reshape(n, n)
    return 0.5 * (X + X.T)


def solve_lyapunov(A: np.ndarray, C: np.ndarray, theta: float) -> np.ndarray:
    """Solve PA + A'P - C'C = -2*theta*P for the observer-design matrix P.

    Requires (A + theta*I, C) observable; the returned P is symmetric
    positive definite with residual below 1e-9.
    """
    A = np.asarray(A, float)
    C = np.atleast_2d(np.asarray(C, float))
    if theta <= 0.0:
        raise ObserverDesignError("observer design infeasible: theta must be > 0")
    n = A.shape[0]
    A_shift = A + theta * np.eye(n)
    if not is_observable(A_shift, C):
        raise ObserverDesignError(
            "observer design infeasible: (A + theta*I, C) not observable"
        )
    P = lyap_ct(A_shift, C.T @ C)
    resid = np.linalg.norm(P @ A + A.T @ P - C.T @ C + 2.0 * theta * P)
    if resid > 1e-9:
        raise ObserverDesignError(f"observer design infeasible: residual {resid:.3e}")
    if np.linalg.eigvalsh(P).min() <= 0.0:
        raise ObserverDesignError("observer design infeasible: P not positive definite")
    return P


def lyapunov_residual(A, C, theta, P) -> float:
    return float(np.linalg.norm(P @ A + A.T @ P - C.T @ C + 2.0 * theta * P))


def _bass_stabilizing_gain(A: np.ndarray, B: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Gain K0 with A - B K0 Hurwitz, via the shifted-Lyapunov construction."""
    n = A.shape[0]
    if np.max(np.abs(B)) == 0.0 or np.max(np.linalg.eigvals(A).real) < 0.0:
        return np.zeros((B.shape[1], n))
    beta = 2.0 * max(1.0, np.max(np.abs(np.linalg.eigvals(A).real)), np.linalg.norm(A))
    eps = 1e-9 * max(1.0, float(np.trace(B @ B.T)))
    for _ in range(6):
        # (A+beta I) M + M (A+beta I)' = 2 B B' + eps I,  K0 = B' M^{-1}
        M = lyap_ct((A + beta * np.eye(n)).T, 2.0 * B @ B.T + eps * np.eye(n))
        if np.linalg.eigvalsh(0.5 * (M + M.T)).min() > 0.0:
            K0 = np.linalg.solve(M.T, B).T
            if np.max(np.linalg.eigvals(A - B @ K0).real) < 0.0:
                return K0
        beta *= 4.0
    raise ControlDesignError("failed to find a stabilizing initial gain")


def solve_care(A, B, Q, R, max_iter: int = 60):
    """Solve A'P + PA - P B R^{-1} B' P + Q = 0; returns (P, K = R^{-1}B'P)."""
    A = np.asarray(A, float)
    n = A.shape[0]
    B = np.asarray(B, float).reshape(n, -1)
    Q = np.asarray(Q, float)
    R = np.atleast_2d(np.asarray(R, float))
    if np.linalg.eigvalsh(0.5 * (R + R.T)).min() <= 0.0:
        raise ControlDesignError("R must be positive definite")
    if np.linalg.eigvalsh(0.5 * (Q + Q.T)).min() < -1e-12:
        raise ControlDesignError("Q must be positive semidefinite")
    if not is_stabilizable(A, B):
        raise ControlDesignError("(A, B) is not stabilizable")

    K = _bass_stabilizing_gain(A, B, R)
    P = np.zeros((n, n))
    for _ in range(max_iter):
        Acl = A - B @ K
        P_new = lyap_ct(Acl, -(Q + K.T @ R @ K))
        K_new = np.linalg.solve(R, B.T @ P_new)
        if np.linalg.norm(P_new - P) <= 1e-13 * (1.0 + np.linalg.norm(P_new)):
            P, K = P_new, K_new
            break
        P, K = P_new, K_new
    else:
        raise ControlDesignError("Newton-Kleinman iteration did not converge")

    resid = np.linalg.norm(A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q)
    if resid > 1e-8:
        raise ControlDesignError(f"CARE residual too large: {resid:.3e}")
    if np.max(np.linalg.eigvals(A - B @ K).real) >= 0.0:
        raise ControlDesignError("closed loop not Hurwitz")
    return P, K


def care_residual(A, B, Q, R, P) -> float:
    B = np.asarray(B, float).reshape(A.shape[0], -1)
    R = np.atleast_2d(np.asarray(R, float))
    return float(
        np.linalg.norm(A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q)
    )
