"""A small dense LP solver for the package's steady-state programs.

Every linear program in this package is tiny (at most a few dozen
variables and rows), so the solver optimizes for robustness and
determinism rather than speed:

* two-phase dense simplex with Bland's pivoting rule (no cycling),
* pivot tolerance 1e-10, feasibility tolerance 1e-9,
* deterministic tie-breaking among optimal vertices: the returned
  vertex is the lexicographically smallest optimal solution, obtained
  by re-minimizing each variable in index order subject to optimality.

The lexicographic step matters at knife-edge parameter points where the
optimum is a face rather than a vertex; it pins golden tests and makes
the capacity-planning solutions report used (not padded) capacities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LpStructureError

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9

LESS_EQ = "<="
EQUAL = "=="

_MAX_ITER = 50_000


@dataclass(frozen=True)
class LpProblem:
    """maximize objective . x subject to linear constraints and bounds.

    ``constraints`` is a sequence of ``(coefficients, relation, rhs)``
    with relation one of "<=" or "==".  Bounds default to [0, +inf) per
    variable; lower bounds must be finite.
    """

    objective: tuple
    constraints: tuple
    bounds: tuple = ()

    def __post_init__(self):
        n = len(self.objective)
        if n == 0:
            raise LpStructureError("LP needs at least one variable")
        for k, (coeffs, rel, rhs) in enumerate(self.constraints):
            if len(coeffs) != n:
                raise LpStructureError(
                    f"constraint {k} has {len(coeffs)} coefficients, expected {n}"
                )
            if rel not in (LESS_EQ, EQUAL):
                raise LpStructureError(f"constraint {k}: unknown relation {rel!r}")
            if not math.isfinite(rhs):
                raise LpStructureError(f"constraint {k}: rhs must be finite")
            if any(not math.isfinite(c) for c in coeffs):
                raise LpStructureError(f"constraint {k}: non-finite coefficient")
        if self.bounds and len(self.bounds) != n:
            raise LpStructureError("bounds length must match variable count")
        for j, (lo, hi) in enumerate(self.effective_bounds()):
            if not math.isfinite(lo):
                raise LpStructureError(f"variable {j}: lower bound must be finite")
            if hi < lo:
                raise LpStructureError(f"variable {j}: empty bound interval")

    def effective_bounds(self):
        if self.bounds:
            return tuple(self.bounds)
        return tuple((0.0, math.inf) for _ in self.objective)


@dataclass(frozen=True)
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    values: tuple = ()
    objective_value: float = math.nan
    binding_constraints: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def problem(objective, constraints, bounds=()) -> LpProblem:
    """Convenience constructor converting nested sequences to tuples."""
    return LpProblem(
        objective=tuple(float(c) for c in objective),
        constraints=tuple(
            (tuple(float(a) for a in coeffs), rel, float(rhs))
            for coeffs, rel, rhs in constraints
        ),
        bounds=tuple((float(lo), float(hi)) for lo, hi in bounds) if bounds else (),
    )


def _simplex(tableau, basis, ncols):
    """Minimize the appended cost row in place.  Bland's rule throughout.

    tableau: (m+1) x (ncols+1) array; last row is the reduced-cost row,
    last column the rhs.  Returns "optimal" or "unbounded".
    """
    m = len(basis)
    for _ in range(_MAX_ITER):
        cost = tableau[m, :ncols]
        enter = -1
        for j in range(ncols):
            if cost[j] < -PIVOT_TOL:
                enter = j
                break
        if enter < 0:
            return "optimal"
        col = tableau[:m, enter]
        best_ratio = math.inf
        leave = -1
        for i in range(m):
            if col[i] > PIVOT_TOL:
                ratio = tableau[i, ncols] / col[i]
                if ratio < best_ratio - PIVOT_TOL or (
                    abs(ratio - best_ratio) <= PIVOT_TOL
                    and (leave < 0 or basis[i] < basis[leave])
                ):
                    best_ratio = ratio
                    leave = i
        if leave < 0:
            return "unbounded"
        _pivot(tableau, basis, leave, enter, m, ncols)
    raise LpStructureError("simplex iteration limit exceeded")


def _pivot(tableau, basis, row, col, m, ncols):
    piv = tableau[row, col]
    tableau[row, : ncols + 1] /= piv
    for i in range(m + 1):
        if i != row:
            factor = tableau[i, col]
            if factor != 0.0:
                tableau[i, : ncols + 1] -= factor * tableau[row, : ncols + 1]
    basis[row] = col


def _solve_raw(prob: LpProblem) -> LpSolution:
    n = len(prob.objective)
    bounds = prob.effective_bounds()
    lo = np.array([b[0] for b in bounds])
    c = np.asarray(prob.objective, dtype=float)

    # Shift to u = x - lo >= 0 and turn finite upper bounds into rows.
    rows = []
    rels = []
    rhs = []
    for coeffs, rel, b in prob.constraints:
        a = np.asarray(coeffs, dtype=float)
        rows.append(a)
        rels.append(rel)
        rhs.append(b - float(a @ lo))
    for j, (l, h) in enumerate(bounds):
        if math.isfinite(h):
            e = np.zeros(n)
            e[j] = 1.0
            rows.append(e)
            rels.append(LESS_EQ)
            rhs.append(h - l)

    m = len(rows)
    n_slack = sum(1 for r in rels if r == LESS_EQ)
    A = np.zeros((m, n + n_slack))
    b_vec = np.zeros(m)
    slack_of_row = {}
    s = 0
    for i in range(m):
        A[i, :n] = rows[i]
        b_vec[i] = rhs[i]
        if rels[i] == LESS_EQ:
            A[i, n + s] = 1.0
            slack_of_row[i] = n + s
            s += 1
    for i in range(m):
        if b_vec[i] < 0.0:
            A[i] *= -1.0
            b_vec[i] *= -1.0

    # Phase 1: artificial variables wherever the slack is not a +1 unit column.
    art_rows = [
        i
        for i in range(m)
        if not (i in slack_of_row and A[i, slack_of_row[i]] == 1.0)
    ]
    n_art = len(art_rows)
    ncols = n + n_slack + n_art
    tableau = np.zeros((m + 1, ncols + 1))
    tableau[:m, : n + n_slack] = A
    tableau[:m, ncols] = b_vec
    basis = [0] * m
    for i in range(m):
        basis[i] = slack_of_row[i] if i not in art_rows else -1
    for k, i in enumerate(art_rows):
        col = n + n_slack + k
        tableau[i, col] = 1.0
        basis[i] = col

    if n_art:
        tableau[m, n + n_slack : ncols] = 1.0
        for i in art_rows:
            tableau[m, : ncols + 1] -= tableau[i, : ncols + 1]
        status = _simplex(tableau, basis, ncols)
        if status != "optimal" or tableau[m, ncols] < -FEAS_TOL:
            return LpSolution(status="infeasible")
        # Drive leftover artificial variables out of the basis.
        art_set = set(range(n + n_slack, ncols))
        drop_rows = []
        for i in range(m):
            if basis[i] in art_set:
                piv_col = next(
                    (
                        j
                        for j in range(n + n_slack)
                        if abs(tableau[i, j]) > PIVOT_TOL
                    ),
                    -1,
                )
                if piv_col < 0:
                    drop_rows.append(i)  # redundant row
                else:
                    _pivot(tableau, basis, i, piv_col, m, ncols)
        if drop_rows:
            keep = [i for i in range(m) if i not in drop_rows]
            tableau = np.vstack([tableau[keep], tableau[m:]])
            basis = [basis[i] for i in keep]
            m = len(basis)

    # Phase 2 on the true objective (maximize c.u -> minimize -c.u).
    ncols2 = n + n_slack
    tableau2 = np.zeros((m + 1, ncols2 + 1))
    tableau2[:m, :ncols2] = tableau[:m, :ncols2]
    tableau2[:m, ncols2] = tableau[:m, -1]
    tableau2[m, :n] = -c
    for i in range(m):
        bj = basis[i]
        factor = tableau2[m, bj]
        if factor != 0.0:
            tableau2[m, : ncols2 + 1] -= factor * tableau2[i, : ncols2 + 1]
    status = _simplex(tableau2, basis, ncols2)
    if status == "unbounded":
        return LpSolution(status="unbounded")

    u = np.zeros(ncols2)
    for i in range(m):
        u[basis[i]] = tableau2[i, ncols2]
    x = lo + u[:n]
    return LpSolution(
        status="optimal",
        values=tuple(float(v) for v in x),
        objective_value=float(c @ x),
    )


def _binding_set(prob: LpProblem, x) -> tuple:
    xv = np.asarray(x)
    out = []
    for k, (coeffs, rel, rhs) in enumerate(prob.constraints):
        lhs = float(np.asarray(coeffs) @ xv)
        if rel == EQUAL or rhs - lhs < FEAS_TOL:
            out.append(k)
    return tuple(out)


def _max_violation(prob: LpProblem, x) -> float:
    xv = np.asarray(x)
    worst = 0.0
    for coeffs, rel, rhs in prob.constraints:
        gap = float(np.asarray(coeffs) @ xv) - rhs
        worst = max(worst, abs(gap) if rel == EQUAL else gap)
    for j, (l, h) in enumerate(prob.effective_bounds()):
        worst = max(worst, l - xv[j])
        if math.isfinite(h):
            worst = max(worst, xv[j] - h)
    return worst


def _polish(prob: LpProblem, x, objective_value: float):
    """Project a near-vertex back onto its active constraint set.

    Chained re-solves in the lexicographic refinement can leave the
    returned point a few 1e-9 off the true vertex; the minimum-norm
    correction onto the active rows restores feasibility without moving
    along unconstrained directions.
    """
    xv = np.asarray(x, dtype=float)
    n = len(xv)
    scale = max(1.0, float(np.max(np.abs(xv))))
    c = np.asarray(prob.objective)
    for active_tol in (1e-6 * scale, 1e-7 * scale):
        rows = []
        rhs = []
        for coeffs, rel, b in prob.constraints:
            gap = float(np.asarray(coeffs) @ xv) - b
            if rel == EQUAL or abs(gap) <= active_tol:
                rows.append(coeffs)
                rhs.append(b)
        for j, (l, h) in enumerate(prob.effective_bounds()):
            if abs(xv[j] - l) <= active_tol:
                e = [0.0] * n
                e[j] = 1.0
                rows.append(e)
                rhs.append(l)
            elif math.isfinite(h) and abs(xv[j] - h) <= active_tol:
                e = [0.0] * n
                e[j] = 1.0
                rows.append(e)
                rhs.append(h)
        if not rows:
            return xv
        A = np.asarray(rows, dtype=float)
        b = np.asarray(rhs, dtype=float)
        delta, *_ = np.linalg.lstsq(A, b - A @ xv, rcond=None)
        candidate = xv + delta
        if (
            _max_violation(prob, candidate) <= FEAS_TOL * scale
            and abs(float(c @ candidate) - objective_value)
            <= 1e-8 * max(1.0, abs(objective_value))
        ):
            return candidate
    return xv


def _check_feasible(prob: LpProblem, x) -> None:
    xv = np.asarray(x)
    scale = max(1.0, float(np.max(np.abs(xv))) if len(xv) else 1.0)
    for k, (coeffs, rel, rhs) in enumerate(prob.constraints):
        lhs = float(np.asarray(coeffs) @ xv)
        gap = lhs - rhs
        if rel == LESS_EQ and gap > FEAS_TOL * scale:
            raise LpStructureError(f"solution violates constraint {k} by {gap:g}")
        if rel == EQUAL and abs(gap) > FEAS_TOL * scale:
            raise LpStructureError(f"solution violates equality {k} by {gap:g}")
    for j, (l, h) in enumerate(prob.effective_bounds()):
        if xv[j] < l - FEAS_TOL * scale or xv[j] > h + FEAS_TOL * scale:
            raise LpStructureError(f"solution violates bounds of variable {j}")


def solve_lp(prob: LpProblem, lexicographic: bool = True) -> LpSolution:
    """Solve the LP; deterministic for a given input.

    With ``lexicographic=True`` (the default) the optimal vertex returned
    is the lexicographically smallest optimal solution: after finding the
    optimal value V*, each variable is minimized in index order subject
    to the original constraints, the optimality cut, and the previously
    pinned coordinates.
    """
    base = _solve_raw(prob)
    if base.status != "optimal":
        return base
    values = list(base.values)
    if lexicographic:
        n = len(values)
        bounds = prob.effective_bounds()
        extra = [(tuple(prob.objective), EQUAL, base.objective_value)]
        for k in range(n):
            e_k = tuple(-1.0 if j == k else 0.0 for j in range(n))
            sub = LpProblem(
                objective=e_k,
                constraints=prob.constraints + tuple(extra),
                bounds=bounds,
            )
            subsol = _solve_raw(sub)
            if subsol.status != "optimal":
                break  # keep the last consistent vertex
            values = list(subsol.values)
            pin = tuple(1.0 if j == k else 0.0 for j in range(n))
            extra.append((pin, EQUAL, max(bounds[k][0], values[k])))
        values = list(_polish(prob, values, base.objective_value))
    obj = float(np.asarray(prob.objective) @ np.asarray(values))
    _check_feasible(prob, values)
    return LpSolution(
        status="optimal",
        values=tuple(values),
        objective_value=obj,
        binding_constraints=_binding_set(prob, values),
    )
