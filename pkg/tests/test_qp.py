import numpy as np
import pytest

from dmpbag import qp
from dmpbag.errors import IllPosedProblemError


def random_problem(rng, n=None, m=None, p=None, feasible=True):
    n = int(rng.integers(2, 7)) if n is None else n
    m = int(rng.integers(0, 9)) if m is None else m
    p = int(rng.integers(0, min(2, n))) if p is None else p
    ell = rng.normal(size=(n, n))
    P = ell @ ell.T + 0.5 * np.eye(n)
    q = rng.normal(size=n)
    G = rng.normal(size=(m, n))
    A = rng.normal(size=(p, n))
    x0 = rng.normal(size=n)
    h = G @ x0 + (rng.uniform(0.0, 1.0, m) if feasible else -rng.uniform(1.0, 2.0, m))
    b = A @ x0
    return qp.QpProblem(P=P, q=q, G=G, h=h, A=A, b=b)


# ---------------------------------------------------------------------------
# trivial cases


def test_unconstrained_identity():
    prob = qp.QpProblem(P=np.eye(3), q=np.zeros(3))
    sol = qp.solve(prob)
    assert sol.status is qp.QpStatus.OPTIMAL
    assert np.allclose(sol.x, 0.0, atol=1e-9)


def test_single_active_bound():
    # min 1/2 x^2 + x s.t. x >= 0, written as -x <= 0: optimum at x = 0.
    prob = qp.QpProblem(P=np.eye(1), q=np.ones(1),
                        G=np.array([[-1.0]]), h=np.zeros(1))
    sol = qp.solve(prob)
    assert sol.x[0] == pytest.approx(0.0, abs=1e-8)
    assert sol.duals_ineq[0] == pytest.approx(1.0, abs=1e-6)


def test_scalar_bound_with_known_dual():
    # min (x-3)^2 s.t. x <= 1: optimum x = 1; stationarity 2x - 6 + mu = 0
    # gives mu = 4.
    prob = qp.QpProblem(P=np.array([[2.0]]), q=np.array([-6.0]),
                        G=np.array([[1.0]]), h=np.array([1.0]))
    sol = qp.solve(prob)
    assert sol.x[0] == pytest.approx(1.0, abs=1e-8)
    assert sol.duals_ineq[0] == pytest.approx(4.0, abs=1e-6)
    res = qp.kkt_residuals(prob, sol)
    assert max(res.values()) <= 1e-9


def test_objective_scaling_leaves_argmin():
    rng = np.random.default_rng(9)
    prob = random_problem(rng, n=4, m=5, p=0)
    scaled = qp.QpProblem(P=37.0 * prob.P, q=37.0 * prob.q, G=prob.G, h=prob.h)
    a = qp.solve(prob)
    b = qp.solve(scaled)
    assert np.max(np.abs(a.x - b.x)) < 1e-8


def test_equality_projection():
    # min 1/2 ||x||^2 s.t. x0 + x1 = 2: optimum (1, 1).
    prob = qp.QpProblem(P=np.eye(2), q=np.zeros(2),
                        A=np.array([[1.0, 1.0]]), b=np.array([2.0]))
    sol = qp.solve(prob)
    assert np.allclose(sol.x, [1.0, 1.0], atol=1e-8)


# ---------------------------------------------------------------------------
# oracle sweep


def test_matches_active_set_enumeration():
    rng = np.random.default_rng(42)
    for trial in range(200):
        prob = random_problem(rng)
        sol = qp.solve(prob)
        ref = qp.solve_active_set_enumeration(prob)
        assert sol.status is qp.QpStatus.OPTIMAL, f"trial {trial}: {sol.status}"
        assert np.max(np.abs(sol.x - ref.x)) < 1e-6, f"trial {trial}"
        res = qp.kkt_residuals(prob, sol)
        assert max(res.values()) < 1e-6, f"trial {trial}: {res}"


def test_solution_is_deterministic():
    rng = np.random.default_rng(7)
    prob = random_problem(rng, n=5, m=6, p=1)
    a = qp.solve(prob)
    b = qp.solve(prob)
    assert np.array_equal(a.x, b.x)
    assert a.iterations == b.iterations


def test_badly_scaled_problem():
    # Objective 12 orders of magnitude smaller than the constraint data.
    rng = np.random.default_rng(3)
    n = 4
    ell = rng.normal(size=(n, n))
    P = 1e-9 * (ell @ ell.T + np.eye(n))
    q = 1e-9 * rng.normal(size=n)
    G = rng.normal(size=(3, n))
    h = G @ rng.normal(size=n) + rng.uniform(0.1, 1.0, 3)
    prob = qp.QpProblem(P=P, q=q, G=G, h=h)
    sol = qp.solve(prob)
    assert sol.status is qp.QpStatus.OPTIMAL
    ref = qp.solve_active_set_enumeration(prob)
    assert np.max(np.abs(sol.x - ref.x)) < 1e-4


# ---------------------------------------------------------------------------
# infeasibility


def test_detects_contradictory_inequalities():
    prob = qp.QpProblem(P=np.eye(2), q=np.zeros(2),
                        G=np.array([[1.0, 0.0], [-1.0, 0.0]]),
                        h=np.array([-1.0, -1.0]))
    assert qp.solve(prob).status is qp.QpStatus.INFEASIBLE


def test_detects_inequality_equality_conflict():
    # x = 0 forced by equality but x <= -1 required.
    prob = qp.QpProblem(P=np.eye(1), q=np.zeros(1),
                        G=np.array([[1.0]]), h=np.array([-1.0]),
                        A=np.array([[1.0]]), b=np.array([0.0]))
    assert qp.solve(prob).status is qp.QpStatus.INFEASIBLE


# ---------------------------------------------------------------------------
# warm start


def test_warm_start_reconverges_quickly():
    rng = np.random.default_rng(11)
    prob = random_problem(rng, n=6, m=8, p=1)
    cold = qp.solve(prob)
    warm = qp.solve(prob, warm_start=cold)
    assert warm.status is qp.QpStatus.OPTIMAL
    assert warm.iterations <= 5
    assert np.max(np.abs(warm.x - cold.x)) < 1e-6


# ---------------------------------------------------------------------------
# kkt_residuals


def test_kkt_residuals_flag_perturbation():
    prob = qp.QpProblem(P=np.eye(1), q=np.ones(1),
                        G=np.array([[-1.0]]), h=np.zeros(1))
    sol = qp.solve(prob)
    clean = qp.kkt_residuals(prob, sol)
    assert max(clean.values()) < 1e-6
    shifted = qp.QpSolution(x=sol.x - 0.1, duals_ineq=sol.duals_ineq,
                            duals_eq=sol.duals_eq, status=sol.status)
    dirty = qp.kkt_residuals(prob, shifted)
    assert dirty["primal"] >= 0.1 - 1e-12


def test_kkt_zero_duals_inactive_constraints():
    # Unconstrained optimum strictly inside the feasible set.
    prob = qp.QpProblem(P=np.eye(2), q=np.zeros(2),
                        G=np.array([[1.0, 0.0]]), h=np.array([5.0]))
    sol = qp.solve(prob)
    res = qp.kkt_residuals(prob, sol)
    assert res["comp_slack"] == pytest.approx(0.0, abs=1e-9)


# ---------------------------------------------------------------------------
# validation


def test_rejects_asymmetric_p():
    with pytest.raises(ValueError):
        qp.QpProblem(P=np.array([[1.0, 2.0], [0.0, 1.0]]), q=np.zeros(2))


def test_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        qp.QpProblem(P=np.eye(2), q=np.zeros(2),
                     G=np.eye(3), h=np.zeros(2))


def test_rejects_overdetermined_equalities():
    with pytest.raises(ValueError):
        qp.QpProblem(P=np.eye(1), q=np.zeros(1),
                     A=np.array([[1.0], [2.0]]), b=np.zeros(2))


def test_singular_reduced_system_raises():
    # Indefinite P makes the regularized normal matrix non-PD.
    with pytest.raises((IllPosedProblemError, ValueError)):
        prob = qp.QpProblem(P=-np.eye(2), q=np.zeros(2))
        qp.solve(prob)
