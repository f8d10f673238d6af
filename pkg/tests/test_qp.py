import numpy as np
import pytest

from oracle_qp import qp_grid_search, qp_oracle, random_qp

from obsafe.qp import QpProblem, kkt_residual, solve_qp


def make_problem(H, q, A, b):
    return QpProblem(
        H=np.asarray(H, float),
        q=np.asarray(q, float),
        A_ineq=np.asarray(A, float).reshape(-1, len(q)),
        b_ineq=np.asarray(b, float).ravel(),
    )


def test_unconstrained_identity():
    p = make_problem(np.eye(2), np.zeros(2), np.zeros((0, 2)), np.zeros(0))
    sol = solve_qp(p)
    assert sol.status == "optimal"
    assert np.allclose(sol.u_star, 0.0)
    assert sol.active_set == ()


def test_halfspace_projection():
    # min ||u - (1,1)||^2  s.t.  u1 + u2 >= 3  ->  (1.5, 1.5)
    p = make_problem(np.eye(2), -np.ones(2), np.array([[1.0, 1.0]]), np.array([3.0]))
    sol = solve_qp(p)
    assert sol.status == "optimal"
    assert np.allclose(sol.u_star, [1.5, 1.5], atol=1e-9)
    assert sol.active_set == (0,)


def test_oracle_against_grid_search():
    # Validate the enumeration oracle itself on a couple of 2-d problems.
    rng = np.random.default_rng(7)
    for _ in range(5):
        H, q, A, b = random_qp(rng, n=2, m=3, allow_infeasible=False)
        u_enum, v_enum = qp_oracle(H, q, A, b)
        u_grid, v_grid = qp_grid_search(H, q, A, b, lo=[-20, -20], hi=[20, 20])
        assert u_enum is not None and u_grid is not None
        assert v_grid >= v_enum - 1e-6
        assert abs(v_grid - v_enum) < 1e-2


def test_random_problems_match_oracle():
    rng = np.random.default_rng(12345)
    n_opt = 0
    for _ in range(50):
        H, q, A, b = random_qp(rng)
        u_ref, _ = qp_oracle(H, q, A, b)
        sol = solve_qp(make_problem(H, q, A, b))
        if u_ref is None:
            assert sol.status == "infeasible"
            continue
        n_opt += 1
        assert sol.status == "optimal"
        assert np.linalg.norm(sol.u_star - u_ref) <= 1e-6
        assert kkt_residual(make_problem(H, q, A, b), sol) <= 1e-8
    assert n_opt >= 20


def test_kkt_and_complementary_slackness():
    rng = np.random.default_rng(99)
    for _ in range(30):
        H, q, A, b = random_qp(rng, allow_infeasible=False)
        p = make_problem(H, q, A, b)
        sol = solve_qp(p)
        assert sol.status == "optimal"
        assert kkt_residual(p, sol) <= 1e-8
        assert sol.multipliers.min(initial=0.0) >= -1e-10
        if len(b):
            slack = A @ sol.u_star - b
            assert slack.min() >= -1e-9
            assert np.max(np.abs(sol.multipliers * slack), initial=0.0) <= 1e-8


def test_solution_lipschitz_in_q_and_b():
    rng = np.random.default_rng(4)
    H, q, A, b = random_qp(rng, n=3, m=4, allow_infeasible=False)
    base = solve_qp(make_problem(H, q, A, b))
    assert base.status == "optimal"
    ratios = []
    for _ in range(40):
        dq = rng.normal(size=3)
        dq *= 1e-4 / np.linalg.norm(dq)
        pert = solve_qp(make_problem(H, q + dq, A, b))
        assert pert.status == "optimal"
        ratios.append(np.linalg.norm(pert.u_star - base.u_star) / 1e-4)
        db = rng.normal(size=4)
        db *= 1e-4 / np.linalg.norm(db)
        pert = solve_qp(make_problem(H, q, A, b + db))
        assert pert.status == "optimal"
        ratios.append(np.linalg.norm(pert.u_star - base.u_star) / 1e-4)
    assert max(ratios) < 1e3


def test_infeasible_certificate():
    # u >= 1 and -u >= 0 cannot both hold.
    p = make_problem(np.eye(1), np.zeros(1), np.array([[1.0], [-1.0]]), np.array([1.0, 0.0]))
    sol = solve_qp(p)
    assert sol.status == "infeasible"


def test_warm_start_matches_cold():
    rng = np.random.default_rng(21)
    for _ in range(20):
        H, q, A, b = random_qp(rng, allow_infeasible=False)
        p = make_problem(H, q, A, b)
        cold = solve_qp(p)
        warm = solve_qp(p, warm_start=cold.active_set)
        assert warm.status == "optimal"
        assert np.linalg.norm(warm.u_star - cold.u_star) <= 1e-9
        # a wrong warm start must not change the answer either
        warm2 = solve_qp(p, warm_start=tuple(range(min(1, len(b)))))
        assert np.linalg.norm(warm2.u_star - cold.u_star) <= 1e-6


def test_invalid_problems_rejected():
    with pytest.raises(ValueError):
        QpProblem(
            H=np.array([[1.0, 0.5], [0.0, 1.0]]),  # not symmetric
            q=np.zeros(2),
            A_ineq=np.zeros((0, 2)),
            b_ineq=np.zeros(0),
        )
    with pytest.raises(ValueError):
        QpProblem(
            H=np.diag([1.0, -1.0]),  # not positive definite
            q=np.zeros(2),
            A_ineq=np.zeros((0, 2)),
            b_ineq=np.zeros(0),
        )
