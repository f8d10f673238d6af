"""Dense strictly-convex QP solver (dual active-set method).

Solves  min 1/2 u'Hu + q'u  s.t.  A_ineq u >= b_ineq  for small problems
(a handful of variables and constraints, solved thousands of times per
simulation). The method starts from the unconstrained minimizer and adds
violated constraints one at a time while keeping dual feasibility, so no
phase-1 is needed; ties are broken by most-negative slack first, then by
constraint index, which guarantees termination on the degenerate instances
produced by duplicated constraint rows.
"""
from dataclasses import dataclass, field

import numpy as np

from ._jit import maybe_njit

_STATUS = ("optimal", "infeasible", "max_iterations", "invalid")


@dataclass(frozen=True)
class QpProblem:
    """min 1/2 u'Hu + q'u  s.t.  A_ineq u >= b_ineq (m may be 0)."""

    H: np.ndarray
    q: np.ndarray
    A_ineq: np.ndarray
    b_ineq: np.ndarray

    def __post_init__(self):
        H = np.asarray(self.H, float)
        n = H.shape[0]
        if H.shape != (n, n):
            raise ValueError("H must be square")
        if np.max(np.abs(H - H.T), initial=0.0) > 1e-12:
            raise ValueError("H must be symmetric to 1e-12")
        if np.linalg.eigvalsh(H).min() <= 0.0:
            raise ValueError("H must be positive definite")
        if self.q.shape != (n,):
            raise ValueError("q has wrong shape")
        if self.A_ineq.shape[1:] != (n,):
            raise ValueError("A_ineq has wrong shape")
        if self.b_ineq.shape != (self.A_ineq.shape[0],):
            raise ValueError("b_ineq has wrong shape")

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def m(self) -> int:
        return self.A_ineq.shape[0]


@dataclass(frozen=True)
class QpSolution:
    u_star: np.ndarray
    active_set: tuple
    status: str
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0


@maybe_njit
def _chol_factor(M, L):
    """In-place Cholesky of M into lower-triangular L; 0 on success."""
    n = M.shape[0]
    for i in range(n):
        for j in range(i + 1):
            s = M[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                if s <= 0.0:
                    return 1
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    return 0


@maybe_njit
def _chol_solve(L, rhs):
    n = L.shape[0]
    y = np.empty(n)
    for i in range(n):
        s = rhs[i]
        for k in range(i):
            s -= L[i, k] * y[k]
        y[i] = s / L[i, i]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        s = y[i]
        for k in range(i + 1, n):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]
    return x


@maybe_njit
def _kkt_try(H, Lh, q, A, b, idx, lam_out, u_out):
    """Solve the equality KKT system for active set idx.

    Returns 0 and fills u_out/lam_out when the candidate satisfies dual
    feasibility on idx; 1 when the reduced system is not SPD; 2 when dual
    infeasible.
    """
    n = H.shape[0]
    nw = idx.shape[0]
    AW = np.empty((nw, n))
    for j in range(nw):
        AW[j] = A[idx[j]]
    HiAWT = np.empty((n, nw))
    for j in range(nw):
        HiAWT[:, j] = _chol_solve(Lh, AW[j])
    S = AW @ HiAWT
    Ls = np.zeros((nw, nw))
    if _chol_factor(S, Ls) != 0:
        return 1
    rhs = AW @ _chol_solve(Lh, q)
    for j in range(nw):
        rhs[j] += b[idx[j]]
    lw = _chol_solve(Ls, rhs)
    v = -q.copy()
    for j in range(nw):
        v += AW[j] * lw[j]
    u = _chol_solve(Lh, v)
    # Iterative refinement: a strongly scale-split H (the regularized
    # auxiliary block) loses ~1e-5 in one Schur pass; two correction
    # rounds push the KKT residual back to rounding level.
    for _ in range(2):
        rho1 = -q - H @ u
        for j in range(nw):
            rho1 += AW[j] * lw[j]
        rho2 = np.empty(nw)
        for j in range(nw):
            rho2[j] = b[idx[j]] - AW[j] @ u
        dlam = _chol_solve(Ls, rho2 - AW @ _chol_solve(Lh, rho1))
        corr = rho1.copy()
        for j in range(nw):
            corr += AW[j] * dlam[j]
        u = u + _chol_solve(Lh, corr)
        for j in range(nw):
            lw[j] += dlam[j]
    for j in range(nw):
        if lw[j] < -1e-12:
            return 2
    for i in range(n):
        u_out[i] = u[i]
    for j in range(nw):
        lam_out[j] = lw[j]
    return 0


@maybe_njit
def qp_solve_kernel(H, q, A, b, cap, warm):
    """Dual active-set QP solve. Returns (u, lam, active, status, iters)."""
    n = H.shape[0]
    m = A.shape[0]
    lam = np.zeros(m)
    active = np.zeros(m, np.bool_)
    Lh = np.zeros((n, n))
    if _chol_factor(H, Lh) != 0:
        return np.zeros(n), lam, active, 3, 0
    u = _chol_solve(Lh, -q)
    if m == 0:
        return u, lam, active, 0, 0

    # Warm start: accept a proposed active set only if it passes full KKT.
    nw = 0
    for i in range(m):
        if warm[i]:
            nw += 1
    if 0 < nw <= n:
        idx = np.empty(nw, np.int64)
        k = 0
        for i in range(m):
            if warm[i]:
                idx[k] = i
                k += 1
        lw = np.zeros(nw)
        ucand = np.zeros(n)
        if _kkt_try(H, Lh, q, A, b, idx, lw, ucand) == 0:
            smin = 0.0
            for i in range(m):
                s = A[i] @ ucand - b[i]
                if s < smin:
                    smin = s
            if smin >= -1e-10:
                for j in range(nw):
                    lam[idx[j]] = lw[j]
                    active[idx[j]] = True
                return ucand, lam, active, 0, 0

    row_scale = np.empty(m)
    for i in range(m):
        rs = 0.0
        for j in range(n):
            aij = A[i, j]
            if aij < 0.0:
                aij = -aij
            if aij > rs:
                rs = aij
        row_scale[i] = rs

    iters = 0
    while True:
        iters += 1
        if iters > cap:
            return u, lam, active, 2, iters
        umax = 0.0
        for j in range(n):
            uj = u[j]
            if uj < 0.0:
                uj = -uj
            if uj > umax:
                umax = uj
        p = -1
        worst = 0.0
        for i in range(m):
            if not active[i]:
                # violation threshold scales with the row and iterate so fp
                # noise on duplicated rows cannot ping-pong the active set
                tol = 1e-9 * (1.0 + abs(b[i])) + 1e-10 * row_scale[i] * umax
                s = A[i] @ u - b[i] + tol
                if s < worst:
                    worst = s
                    p = i
        if p < 0:
            break
        lam_p = 0.0
        while True:
            iters += 1
            if iters > cap:
                return u, lam, active, 2, iters
            nW = 0
            for i in range(m):
                if active[i]:
                    nW += 1
            idx = np.empty(nW, np.int64)
            k = 0
            for i in range(m):
                if active[i]:
                    idx[k] = i
                    k += 1
            hi_ap = _chol_solve(Lh, A[p])
            z = hi_ap.copy()
            r = np.zeros(nW)
            singular = False
            dependent = False
            if nW > 0:
                AW = np.empty((nW, n))
                for j in range(nW):
                    AW[j] = A[idx[j]]
                # dependence of a_p on the active rows, judged in the plain
                # Euclidean metric so a strongly scale-split H cannot mask it
                G = AW @ AW.T
                Lg = np.zeros((nW, nW))
                if _chol_factor(G, Lg) == 0:
                    c = _chol_solve(Lg, AW @ A[p])
                    resid = A[p] - AW.T @ c
                    ap_sq = A[p] @ A[p]
                    if resid @ resid <= 1e-20 * ap_sq:
                        dependent = True
                HiAWT = np.empty((n, nW))
                for j in range(nW):
                    HiAWT[:, j] = _chol_solve(Lh, AW[j])
                S = AW @ HiAWT
                Ls = np.zeros((nW, nW))
                if _chol_factor(S, Ls) == 0:
                    r = _chol_solve(Ls, AW @ hi_ap)
                    z = hi_ap - HiAWT @ r
                else:
                    singular = True
            if singular:
                kdrop = idx[0]
                lmin = lam[idx[0]]
                for j in range(nW):
                    if lam[idx[j]] < lmin:
                        lmin = lam[idx[j]]
                        kdrop = idx[j]
                active[kdrop] = False
                lam[kdrop] = 0.0
                continue
            # With A_W z = 0, A_p z equals z'Hz >= 0; the direct inner
            # product cancels catastrophically for near-dependent rows, so
            # use the quadratic form and only when a_p is genuinely outside
            # the active rowspan.
            apz = z @ (H @ z)
            sp = A[p] @ u - b[p]
            t2 = np.inf
            if not dependent and apz > 0.0:
                t2 = -sp / apz
                if t2 < 0.0:
                    t2 = 0.0
            t1 = np.inf
            kdrop = -1
            for j in range(nW):
                if r[j] > 1e-12:
                    tj = lam[idx[j]] / r[j]
                    if tj < t1 - 1e-14:
                        t1 = tj
                        kdrop = idx[j]
            if not (t1 < np.inf or t2 < np.inf):
                return u, lam, active, 1, iters
            t = t1 if t1 < t2 else t2
            if t < 0.0:
                t = 0.0
            u = u + t * z
            for j in range(nW):
                lam[idx[j]] -= t * r[j]
                if lam[idx[j]] < 0.0:
                    lam[idx[j]] = 0.0
            lam_p += t
            if t2 <= t1:
                active[p] = True
                lam[p] = lam_p
                break
            active[kdrop] = False
            lam[kdrop] = 0.0

    # Polish: re-solve the equality KKT on the final active set to push the
    # stationarity residual down to rounding level.
    nact = 0
    for i in range(m):
        if active[i]:
            nact += 1
    if nact > 0:
        idx = np.empty(nact, np.int64)
        k = 0
        for i in range(m):
            if active[i]:
                idx[k] = i
                k += 1
        lw = np.zeros(nact)
        ucand = np.zeros(n)
        if _kkt_try(H, Lh, q, A, b, idx, lw, ucand) == 0:
            smin = 0.0
            for i in range(m):
                s = A[i] @ ucand - b[i]
                if s < smin:
                    smin = s
            if smin >= -1e-9:
                u = ucand
                for j in range(nact):
                    lam[idx[j]] = lw[j]
    # defensive: a returned optimum must actually be feasible
    for i in range(m):
        if A[i] @ u - b[i] < -1e-6:
            return u, lam, active, 2, iters
    return u, lam, active, 0, iters


def solve_qp(problem: QpProblem, warm_start=None, iteration_cap: int = 100) -> QpSolution:
    """Solve a QpProblem.

    warm_start is an optional iterable of constraint indices tried as the
    initial active set (taken from the previous control step); it never
    changes the answer, only the work done.
    """
    m = problem.m
    warm = np.zeros(m, bool)
    if warm_start is not None:
        for i in warm_start:
            if 0 <= int(i) < m:
                warm[int(i)] = True
    u, lam, active, status, iters = qp_solve_kernel(
        np.ascontiguousarray(problem.H, float),
        np.ascontiguousarray(problem.q, float),
        np.ascontiguousarray(problem.A_ineq, float),
        np.ascontiguousarray(problem.b_ineq, float),
        int(iteration_cap),
        warm,
    )
    return QpSolution(
        u_star=u,
        active_set=tuple(int(i) for i in np.nonzero(active)[0]),
        status=_STATUS[int(status)],
        multipliers=lam,
        iterations=int(iters),
    )


def kkt_residual(problem: QpProblem, sol: QpSolution) -> float:
    """Stationarity residual ||Hu + q - A' lam|| for an optimal solution."""
    grad = problem.H @ sol.u_star + problem.q
    if problem.m:
        grad = grad - problem.A_ineq.T @ sol.multipliers
    return float(np.linalg.norm(grad))
