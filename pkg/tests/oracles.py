"""Independent oracles used to cross-check the package's own machinery.

These deliberately share no code with the implementations they verify:
the LP oracle enumerates basic solutions instead of pivoting, and the
Erlang-A oracle evaluates the birth-death stationary distribution
instead of simulating.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from judgeflow.lp import EQUAL, LpProblem

FEAS_TOL = 1e-7


def enumerate_lp_optimum(prob: LpProblem):
    """Maximum objective over all basic feasible solutions.

    Treats every constraint row plus every finite bound as a hyperplane,
    solves all n-subsets (batched), keeps the feasible intersection
    points, and maximizes.  Returns (status, best_value, best_point);
    status is "optimal" or "infeasible".  Only sensible for small,
    bounded problems (the feasible set must be a polytope so every
    optimum is attained at a vertex).
    """
    n = len(prob.objective)
    rows = []
    rhs = []
    kinds = []  # "eq" rows always active; "ineq" active optionally
    for coeffs, rel, b in prob.constraints:
        rows.append(list(coeffs))
        rhs.append(b)
        kinds.append("eq" if rel == EQUAL else "ineq")
    for j, (lo, hi) in enumerate(prob.effective_bounds()):
        e = [0.0] * n
        e[j] = 1.0
        rows.append(e)
        rhs.append(lo)
        kinds.append("ineq")
        if math.isfinite(hi):
            rows.append(list(e))
            rhs.append(hi)
            kinds.append("ineq")
    A = np.array(rows)
    b = np.array(rhs)
    eq_idx = [k for k, kind in enumerate(kinds) if kind == "eq"]
    ineq_idx = [k for k, kind in enumerate(kinds) if kind == "ineq"]
    c = np.array(prob.objective)

    need = n - len(eq_idx)
    if need < 0:
        combos = [list(cm) for cm in itertools.combinations(eq_idx, n)]
    else:
        combos = [
            eq_idx + list(extra)
            for extra in itertools.combinations(ineq_idx, need)
        ]
    if not combos:
        return "infeasible", None, None
    idx = np.array(combos)
    A_batch = A[idx]
    b_batch = b[idx]
    dets = np.linalg.det(A_batch)
    mask = np.abs(dets) > 1e-11
    if not mask.any():
        return "infeasible", None, None
    X = np.linalg.solve(A_batch[mask], b_batch[mask][..., None])[..., 0]
    feas = np.all(np.isfinite(X), axis=1)
    # Near-singular active sets explode; such points cannot be real
    # vertices of these O(1)-scaled problems.
    feas &= np.max(np.abs(np.where(np.isfinite(X), X, np.inf)), axis=1) < 1e6
    scale = np.maximum(1.0, np.max(np.abs(np.where(np.isfinite(X), X, 0.0)),
                                   axis=1))
    for (coeffs, rel, rhs_k) in prob.constraints:
        lhs = X @ np.asarray(coeffs)
        if rel == EQUAL:
            feas &= np.abs(lhs - rhs_k) <= FEAS_TOL * scale
        else:
            feas &= lhs <= rhs_k + FEAS_TOL * scale
    for j, (lo, hi) in enumerate(prob.effective_bounds()):
        feas &= X[:, j] >= lo - FEAS_TOL * scale
        if math.isfinite(hi):
            feas &= X[:, j] <= hi + FEAS_TOL * scale
    if not feas.any():
        return "infeasible", None, None
    vals = X @ c
    vals[~feas] = -np.inf
    k = int(np.argmax(vals))
    return "optimal", float(vals[k]), tuple(float(v) for v in X[k])


def erlang_a_abandonment(lam: float, mu: float, servers: int, theta: float) -> float:
    """Stationary abandonment probability of an M/M/s+M queue.

    Birth rate lam; death rate min(k, s) mu + max(k - s, 0) theta.
    Evaluates P(abandon) = theta E[Q] / lam from the (normalized)
    birth-death stationary distribution, truncating the tail once the
    remaining mass is negligible.
    """
    if lam <= 0:
        return 0.0
    # Unnormalized probabilities via the detailed-balance recursion,
    # renormalized on the fly to avoid overflow.
    p = 1.0
    total = p
    queue_mass = 0.0
    k = 0
    # For k > s the death rate grows linearly in k, so the tail decays
    # super-geometrically; cap generously and stop once increments vanish.
    k_max = int(servers + 60 * max(1.0, lam / max(theta, 1e-9)) ** 0.5
                + 20 * lam / (servers * mu + theta) + 10_000)
    while k < k_max:
        death = min(k + 1, servers) * mu + max(k + 1 - servers, 0) * theta
        p = p * lam / death
        k += 1
        total += p
        if k > servers:
            queue_mass += (k - servers) * p
        if p < total * 1e-18 and k > servers + 10:
            break
        if total > 1e280:  # renormalize to stay in range
            p /= total
            queue_mass /= total
            total = 1.0
    expected_queue = queue_mass / total
    return theta * expected_queue / lam
