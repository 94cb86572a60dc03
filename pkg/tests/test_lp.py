import math
import random

import numpy as np
import pytest

from judgeflow.errors import LpStructureError
from judgeflow.lp import problem, solve_lp

from oracles import enumerate_lp_optimum


def test_trivial_box():
    sol = solve_lp(problem([1.0], [([1.0], "<=", 1.0)]))
    assert sol.status == "optimal"
    assert sol.values[0] == pytest.approx(1.0, abs=1e-12)
    assert sol.objective_value == pytest.approx(1.0, abs=1e-12)
    assert sol.binding_constraints == (0,)


def test_infeasible():
    assert solve_lp(problem([1.0], [([1.0], "<=", -1.0)])).status == "infeasible"


def test_unbounded():
    assert solve_lp(problem([1.0], [([-1.0], "<=", 0.0)])).status == "unbounded"


def test_reduced_single_class_matches_phase3_closed_form():
    # Scarce-worker benchmark at n_h = 9: the worker and human rows bind,
    # giving x* = n_w and v* = (n_w - H) / p_rej in closed form.
    mu_w, mu_j, mu_h = 20.0, 30.0, 10.0
    n_w, n_j, n_h = 5.0, 3.0, 9.0
    lam, alpha, b1 = 75.0, 0.3, 0.1
    p_pass = (1 - alpha) * (1 - b1) + alpha * 0.2
    p_rej = 1 - p_pass
    w = mu_w * (1 - alpha)
    prob = problem(
        [w, -w * b1],
        [
            ([-1.0, 1.0], "<=", 0.0),
            ([1.0, -b1], "<=", lam / w),
            ([1.0, 0.0], "<=", n_w),
            ([0.0, mu_w / mu_j], "<=", n_j),
            ([1.0, -p_rej], "<=", (mu_h / mu_w) * n_h),
        ],
    )
    sol = solve_lp(prob)
    v_expect = (n_w - (mu_h / mu_w) * n_h) / p_rej
    assert sol.status == "optimal"
    assert sol.values[0] == pytest.approx(5.0, abs=1e-9)
    assert sol.values[1] == pytest.approx(v_expect, abs=1e-9)
    assert sol.objective_value == pytest.approx(w * (5.0 - b1 * v_expect), abs=1e-9)
    status, best, _ = enumerate_lp_optimum(prob)
    assert status == "optimal"
    assert sol.objective_value == pytest.approx(best, abs=1e-8)


def test_objective_reevaluation_identity():
    prob = problem(
        [2.0, -1.0, 0.5],
        [([1.0, 1.0, 1.0], "<=", 4.0), ([1.0, -1.0, 0.0], "==", 0.5)],
    )
    sol = solve_lp(prob)
    assert sol.status == "optimal"
    re_eval = sum(c * v for c, v in zip(prob.objective, sol.values))
    assert abs(re_eval - sol.objective_value) <= 1e-12


def test_positive_scaling_leaves_argmax_unchanged():
    base = problem(
        [1.0, 2.0],
        [([1.0, 1.0], "<=", 3.0), ([2.0, 1.0], "<=", 4.0)],
    )
    scale = 3.7
    scaled = problem(
        [scale * 1.0, scale * 2.0],
        [
            ([scale * 1.0, scale * 1.0], "<=", scale * 3.0),
            ([scale * 2.0, scale * 1.0], "<=", scale * 4.0),
        ],
    )
    a = solve_lp(base)
    b = solve_lp(scaled)
    assert a.status == b.status == "optimal"
    for va, vb in zip(a.values, b.values):
        assert va == pytest.approx(vb, abs=1e-9)


def test_lexicographic_tie_break_is_smallest_vertex():
    # Every point on x + y = 1 is optimal; the lexicographically smallest
    # optimal vertex is (0, 1).
    sol = solve_lp(problem([1.0, 1.0], [([1.0, 1.0], "<=", 1.0)]))
    assert sol.values == pytest.approx((0.0, 1.0), abs=1e-12)
    # A flat objective picks the origin.
    sol0 = solve_lp(problem([0.0, 0.0], [([1.0, 1.0], "<=", 2.0)]))
    assert sol0.values == pytest.approx((0.0, 0.0), abs=1e-12)


def test_bounds_and_equalities():
    sol = solve_lp(
        problem(
            [1.0, 1.0],
            [([1.0, 1.0], "==", 1.0), ([1.0, 0.0], "<=", 0.3)],
        )
    )
    assert sol.status == "optimal"
    assert sol.objective_value == pytest.approx(1.0, abs=1e-12)
    sol2 = solve_lp(problem([1.0], [], bounds=[(0.5, 2.5)]))
    assert sol2.values[0] == pytest.approx(2.5, abs=1e-12)
    sol3 = solve_lp(problem([-1.0], [], bounds=[(0.5, 2.5)]))
    assert sol3.values[0] == pytest.approx(0.5, abs=1e-12)


def test_structural_validation():
    with pytest.raises(LpStructureError):
        problem([1.0, 2.0], [([1.0], "<=", 1.0)])
    with pytest.raises(LpStructureError):
        problem([1.0], [([1.0], "<", 1.0)])
    with pytest.raises(LpStructureError):
        problem([1.0], [([1.0], "<=", math.inf)])
    with pytest.raises(LpStructureError):
        problem([1.0], [], bounds=[(-math.inf, 1.0)])


def random_bounded_problem(rng: random.Random):
    n = rng.randint(1, 6)
    m = rng.randint(1, 6)
    cons = []
    for _ in range(m):
        coeffs = [rng.uniform(-1, 1) for _ in range(n)]
        rel = "==" if rng.random() < 0.15 else "<="
        rhs = rng.uniform(0.0, 2.0) if rel == "<=" else rng.uniform(-0.5, 1.5)
        cons.append((coeffs, rel, rhs))
    bounds = [(0.0, rng.uniform(0.5, 3.0)) for _ in range(n)]
    objective = [rng.uniform(-1, 1) for _ in range(n)]
    return problem(objective, cons, bounds)


def test_agreement_with_vertex_enumeration_sample():
    rng = random.Random(20240817)
    checked = 0
    for _ in range(200):
        prob = random_bounded_problem(rng)
        sol = solve_lp(prob)
        status, best, _ = enumerate_lp_optimum(prob)
        assert sol.status == status, prob
        if status == "optimal":
            scale = max(1.0, abs(best))
            assert abs(sol.objective_value - best) <= 1e-8 * scale, prob
            checked += 1
    assert checked > 100  # most random draws should be feasible


def test_determinism_across_runs():
    rng = random.Random(7)
    prob = random_bounded_problem(rng)
    a = solve_lp(prob)
    b = solve_lp(prob)
    assert a.values == b.values
    assert a.objective_value == b.objective_value


def test_solution_feasible_within_tolerance():
    rng = random.Random(99)
    for _ in range(50):
        prob = random_bounded_problem(rng)
        sol = solve_lp(prob)
        if sol.status != "optimal":
            continue
        x = np.array(sol.values)
        for coeffs, rel, rhs in prob.constraints:
            lhs = float(np.dot(coeffs, x))
            if rel == "<=":
                assert lhs <= rhs + 1e-9
            else:
                assert abs(lhs - rhs) <= 1e-9
