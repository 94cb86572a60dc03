"""Steady-state fluid optimization of the three-pool screening network.

The stochastic network (workers -> optional judge screening -> human
review, with rework loops back to the work queue) has a deterministic
mean-rate limit whose steady states solve a linear program.  After
eliminating the intermediate masses through flow balance,

    y_i   = (mu_w/mu_j) v_i                (judge service mass)
    z_d,i = (mu_w/mu_h) (x_i - v_i)        (human mass, direct path)
    z_j,i = (mu_w/mu_h) p_pass_i v_i       (human mass, judge path)

the program reduces to variables (x_i, v_i) per class, where x_i is the
worker service mass and v_i <= x_i the judge-routed share:

    max  sum_i r_i mu_w_i (1 - alpha_i) (x_i - beta_I_i v_i)
    s.t. 0 <= v_i <= x_i
         x_i - beta_I_i v_i <= lambda_i / (mu_w_i (1 - alpha_i))
         sum_i x_i <= n_w
         sum_i (mu_w_i/mu_j_i) v_i <= n_j
         sum_i (mu_w_i/mu_h_i) (x_i - p_rej_i v_i) <= n_h

The per-class arrival cap keeps the recovered work-queue mass
nonnegative; it binds exactly when a class is fully served.  The module
also solves the feedback-task extension and the budgeted capacity-
planning variant of the same program.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DomainError, OverloadWithoutAbandonmentError
from .lp import EQUAL, LESS_EQ, problem, solve_lp
from .quality import QualityParams, derive_feedback, derive_quality

MASS_TOL = 1e-9


@dataclass(frozen=True)
class ClassParams:
    """Arrival, patience, service, reward and quality primitives of a class."""

    lam: float
    theta: float
    mu_w: float
    mu_j: float
    mu_h: float
    reward: float
    quality: QualityParams

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise DomainError(f"lambda must be >= 0, got {self.lam!r}")
        if self.theta < 0:
            raise DomainError(f"theta must be >= 0, got {self.theta!r}")
        for name in ("mu_w", "mu_j", "mu_h"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be > 0")
        if self.reward <= 0:
            raise DomainError(f"reward must be > 0, got {self.reward!r}")


@dataclass(frozen=True)
class Instance:
    """Full system description: task classes plus the three pool capacities."""

    classes: tuple
    n_w: float
    n_j: float
    n_h: float

    def __post_init__(self) -> None:
        if len(self.classes) < 1:
            raise DomainError("an instance needs at least one class")
        for cap in (self.n_w, self.n_j, self.n_h):
            if cap < 0 or not math.isfinite(cap):
                raise DomainError(f"capacities must be finite and >= 0, got {cap!r}")

    def with_nh(self, n_h: float) -> "Instance":
        return replace(self, n_h=n_h)

    def derived(self):
        return tuple(derive_quality(c.quality) for c in self.classes)


@dataclass(frozen=True)
class FluidSolution:
    """Optimal operating point of the steady-state program."""

    x: tuple
    v: tuple
    y: tuple
    z_d: tuple
    z_j: tuple
    q_w: tuple
    phi: tuple
    objective: float
    binding: tuple = ()

    @property
    def worker_mass(self) -> float:
        return sum(self.x)

    @property
    def judge_mass(self) -> float:
        return sum(self.y)

    @property
    def human_mass(self) -> float:
        return sum(self.z_d) + sum(self.z_j)


@dataclass(frozen=True)
class FeedbackFluidSolution:
    """Optimal operating point with the feedback-task extension."""

    x: tuple
    v: tuple
    x_fb: tuple
    v_fb: tuple
    phi: tuple
    phi_fb: tuple
    objective: float


@dataclass(frozen=True)
class CapacityPlan:
    """Budget-optimal worker/judge split and the fluid point it induces."""

    n_w: float
    n_j: float
    solution: FluidSolution
    budget: float
    gamma_w: float
    gamma_j: float


def _phi(v: float, x: float) -> float:
    if x <= 1e-12:
        return 0.0
    return min(1.0, max(0.0, v / x))


def build_reduced_lp(instance: Instance):
    """Assemble the reduced steady-state LP.

    Returns ``(problem, labels)`` where labels[k] names constraint k
    ("route:i", "arrival:i", "cap:workers", "cap:judges", "cap:humans").
    Variables are ordered (x_0, v_0, x_1, v_1, ...).
    """
    cls = instance.classes
    der = instance.derived()
    n = 2 * len(cls)

    def unit(j, value=1.0):
        row = [0.0] * n
        row[j] = value
        return row

    objective = [0.0] * n
    cons = []
    labels = []
    for i, (c, d) in enumerate(zip(cls, der)):
        xi, vi = 2 * i, 2 * i + 1
        w = c.reward * c.mu_w * (1.0 - c.quality.alpha)
        objective[xi] = w
        objective[vi] = -w * c.quality.beta_I
        row = unit(vi)
        row[xi] = -1.0
        cons.append((row, LESS_EQ, 0.0))
        labels.append(f"route:{i}")
        if c.quality.alpha < 1.0:
            row = unit(xi)
            row[vi] = -c.quality.beta_I
            cap = c.lam / (c.mu_w * (1.0 - c.quality.alpha))
            cons.append((row, LESS_EQ, cap))
            labels.append(f"arrival:{i}")
    cons.append(([1.0 if j % 2 == 0 else 0.0 for j in range(n)], LESS_EQ, instance.n_w))
    labels.append("cap:workers")
    row = [0.0] * n
    for i, c in enumerate(cls):
        row[2 * i + 1] = c.mu_w / c.mu_j
    cons.append((row, LESS_EQ, instance.n_j))
    labels.append("cap:judges")
    row = [0.0] * n
    for i, (c, d) in enumerate(zip(cls, der)):
        row[2 * i] = c.mu_w / c.mu_h
        row[2 * i + 1] = -(c.mu_w / c.mu_h) * d.p_rej
    cons.append((row, LESS_EQ, instance.n_h))
    labels.append("cap:humans")
    return problem(objective, cons), tuple(labels)


def _recover_q_w(c: ClassParams, x: float, v: float) -> float:
    """Work-queue mass from the queue balance; see module docstring.

    Net inflow minus worker service leaves theta * q_w, so

        q_w = (lambda - mu_w (1 - alpha)(x - beta_I v)) / theta.

    With theta = 0 a steady state exists only when the balance already
    closes; report q_w = 0 then, otherwise the queue grows without bound.
    """
    completed = c.mu_w * (1.0 - c.quality.alpha) * (x - c.quality.beta_I * v)
    residual = c.lam - completed
    if c.theta > 0.0:
        q = residual / c.theta
        if q < -MASS_TOL:
            raise DomainError(f"negative work-queue mass {q:g} recovered")
        return max(0.0, q)
    if abs(residual) <= MASS_TOL * max(1.0, c.lam):
        return 0.0
    raise OverloadWithoutAbandonmentError(
        f"theta = 0 but arrivals exceed service by {residual:g}; "
        "no steady state without abandonment"
    )


def _clean_mass(value: float) -> float:
    # Solver dust below the feasibility tolerance is a true zero; leaving
    # it positive would make strict admission thresholds admit phantom
    # flow for classes the optimum excludes.
    return value if value > MASS_TOL else 0.0


def _solution_from_xv(instance: Instance, xs, vs, objective, binding=()):
    der = instance.derived()
    xs = [_clean_mass(x) for x in xs]
    vs = [min(_clean_mass(v), x) for v, x in zip(vs, xs)]
    y, z_d, z_j, q_w, phi = [], [], [], [], []
    for c, d, x, v in zip(instance.classes, der, xs, vs):
        y.append((c.mu_w / c.mu_j) * v)
        z_d.append((c.mu_w / c.mu_h) * (x - v))
        z_j.append((c.mu_w / c.mu_h) * d.p_pass * v)
        q_w.append(_recover_q_w(c, x, v))
        phi.append(_phi(v, x))
    return FluidSolution(
        x=tuple(xs),
        v=tuple(vs),
        y=tuple(y),
        z_d=tuple(z_d),
        z_j=tuple(z_j),
        q_w=tuple(q_w),
        phi=tuple(phi),
        objective=objective,
        binding=tuple(binding),
    )


def solve_steady_state(instance: Instance) -> FluidSolution:
    """Solve the reduced LP and recover the full fluid operating point."""
    prob, labels = build_reduced_lp(instance)
    sol = solve_lp(prob)
    if not sol.ok:  # the program always has the feasible point 0
        raise DomainError(f"steady-state LP unexpectedly {sol.status}")
    xs = sol.values[0::2]
    vs = sol.values[1::2]
    binding = tuple(labels[k] for k in sol.binding_constraints)
    return _solution_from_xv(instance, xs, vs, sol.objective_value, binding)


def _kappas(instance: Instance, kappa) -> tuple:
    if isinstance(kappa, (int, float)):
        ks = (float(kappa),) * len(instance.classes)
    else:
        ks = tuple(float(k) for k in kappa)
        if len(ks) != len(instance.classes):
            raise DomainError("kappa must be scalar or one value per class")
    for k in ks:
        if not (0.0 < k < 1.0):
            raise DomainError(f"kappa must lie in (0, 1), got {k!r}")
    return ks


def build_feedback_lp(instance: Instance, kappa, arrival_cap: bool = True):
    """Feedback-extension LP in (x_i, v_i, x_fb_i, v_fb_i) per class.

    Human rejections of fresh tasks feed a second task type with reduced
    failure rate kappa*alpha; its service level is pinned by the flow
    balance x_fb = alpha (x - (1 - beta_II) v), which holds with equality
    at any optimum.  Judge-rejected tasks of either type return to the
    fresh pool, so the fresh queue balance caps
    x - p_rej v - p_rej_fb v_fb at lambda/mu_w; ``arrival_cap=False``
    drops that row, which idealizes a permanently backlogged fresh queue
    regardless of capacities.
    """
    cls = instance.classes
    der = instance.derived()
    ks = _kappas(instance, kappa)
    n = 4 * len(cls)

    objective = [0.0] * n
    cons = []
    labels = []
    for i, (c, d, k) in enumerate(zip(cls, der, ks)):
        xi, vi, xf, vf = 4 * i, 4 * i + 1, 4 * i + 2, 4 * i + 3
        a, bI, bII = c.quality.alpha, c.quality.beta_I, c.quality.beta_II
        fb = derive_feedback(c.quality, k)
        w = c.reward * c.mu_w
        objective[xi] = w * (1.0 - a)
        objective[vi] = -w * (1.0 - a) * bI
        objective[xf] = w * (1.0 - k * a)
        objective[vf] = -w * (1.0 - k * a) * bI

        row = [0.0] * n
        row[xf] = 1.0
        row[xi] = -a
        row[vi] = a * (1.0 - bII)
        cons.append((row, EQUAL, 0.0))
        labels.append(f"fb-balance:{i}")

        row = [0.0] * n
        row[vi], row[xi] = 1.0, -1.0
        cons.append((row, LESS_EQ, 0.0))
        labels.append(f"route:{i}")
        row = [0.0] * n
        row[vf], row[xf] = 1.0, -1.0
        cons.append((row, LESS_EQ, 0.0))
        labels.append(f"route-fb:{i}")

        if arrival_cap:
            row = [0.0] * n
            row[xi] = 1.0
            row[vi] = -d.p_rej
            row[vf] = -fb.p_rej_fb
            cons.append((row, LESS_EQ, c.lam / c.mu_w))
            labels.append(f"arrival:{i}")

    row = [0.0] * n
    for i in range(len(cls)):
        row[4 * i] = 1.0
        row[4 * i + 2] = 1.0
    cons.append((row, LESS_EQ, instance.n_w))
    labels.append("cap:workers")
    row = [0.0] * n
    for i, c in enumerate(cls):
        row[4 * i + 1] = c.mu_w / c.mu_j
        row[4 * i + 3] = c.mu_w / c.mu_j
    cons.append((row, LESS_EQ, instance.n_j))
    labels.append("cap:judges")
    row = [0.0] * n
    for i, (c, d, k) in enumerate(zip(cls, der, ks)):
        fb = derive_feedback(c.quality, k)
        r = c.mu_w / c.mu_h
        row[4 * i] = r
        row[4 * i + 1] = -r * d.p_rej
        row[4 * i + 2] = r
        row[4 * i + 3] = -r * fb.p_rej_fb
    cons.append((row, LESS_EQ, instance.n_h))
    labels.append("cap:humans")
    return problem(objective, cons), tuple(labels)


def solve_feedback(
    instance: Instance, kappa, arrival_cap: bool = True
) -> FeedbackFluidSolution:
    """Solve the feedback-extension LP; kappa is scalar or per-class."""
    prob, _ = build_feedback_lp(instance, kappa, arrival_cap=arrival_cap)
    sol = solve_lp(prob)
    if not sol.ok:
        raise DomainError(f"feedback LP unexpectedly {sol.status}")
    xs = tuple(_clean_mass(x) for x in sol.values[0::4])
    vs = tuple(min(_clean_mass(v), x) for v, x in zip(sol.values[1::4], xs))
    xfs = tuple(_clean_mass(x) for x in sol.values[2::4])
    vfs = tuple(min(_clean_mass(v), x) for v, x in zip(sol.values[3::4], xfs))
    return FeedbackFluidSolution(
        x=xs,
        v=vs,
        x_fb=xfs,
        v_fb=vfs,
        phi=tuple(_phi(v, x) for v, x in zip(vs, xs)),
        phi_fb=tuple(_phi(v, x) for v, x in zip(vfs, xfs)),
        objective=sol.objective_value,
    )


def solve_capacity_plan(
    instance: Instance, budget: float, gamma_w: float, gamma_j: float
) -> CapacityPlan:
    """Jointly optimize (n_w, n_j, x, v) under gamma_w n_w + gamma_j n_j <= B.

    ``instance.n_w`` and ``instance.n_j`` are ignored; n_h is kept fixed.
    The reported capacities are shrunk to the used service levels (the
    lexicographic vertex minimizes n_w then n_j at equal objective), so
    worker and judge constraints come back binding whenever they matter.
    """
    if budget < 0:
        raise DomainError(f"budget must be >= 0, got {budget!r}")
    if gamma_w <= 0 or gamma_j <= 0:
        raise DomainError("capacity unit costs must be > 0")
    cls = instance.classes
    der = instance.derived()
    n = 2 + 2 * len(cls)

    objective = [0.0] * n
    cons = []
    row = [0.0] * n
    row[0], row[1] = gamma_w, gamma_j
    cons.append((row, LESS_EQ, budget))
    for i, (c, d) in enumerate(zip(cls, der)):
        xi, vi = 2 + 2 * i, 3 + 2 * i
        w = c.reward * c.mu_w * (1.0 - c.quality.alpha)
        objective[xi] = w
        objective[vi] = -w * c.quality.beta_I
        row = [0.0] * n
        row[vi], row[xi] = 1.0, -1.0
        cons.append((row, LESS_EQ, 0.0))
        if c.quality.alpha < 1.0:
            row = [0.0] * n
            row[xi] = 1.0
            row[vi] = -c.quality.beta_I
            cons.append((row, LESS_EQ, c.lam / (c.mu_w * (1.0 - c.quality.alpha))))
    row = [0.0] * n
    row[0] = -1.0
    for i in range(len(cls)):
        row[2 + 2 * i] = 1.0
    cons.append((row, LESS_EQ, 0.0))
    row = [0.0] * n
    row[1] = -1.0
    for i, c in enumerate(cls):
        row[3 + 2 * i] = c.mu_w / c.mu_j
    cons.append((row, LESS_EQ, 0.0))
    row = [0.0] * n
    for i, (c, d) in enumerate(zip(cls, der)):
        row[2 + 2 * i] = c.mu_w / c.mu_h
        row[3 + 2 * i] = -(c.mu_w / c.mu_h) * d.p_rej
    cons.append((row, LESS_EQ, instance.n_h))

    sol = solve_lp(problem(objective, cons))
    if not sol.ok:
        raise DomainError(f"capacity-planning LP unexpectedly {sol.status}")
    n_w_star = _clean_mass(sol.values[0])
    n_j_star = _clean_mass(sol.values[1])
    xs = sol.values[2::2]
    vs = sol.values[3::2]
    planned = replace(instance, n_w=n_w_star, n_j=n_j_star)
    solution = _solution_from_xv(planned, xs, vs, sol.objective_value)
    return CapacityPlan(
        n_w=n_w_star,
        n_j=n_j_star,
        solution=solution,
        budget=budget,
        gamma_w=gamma_w,
        gamma_j=gamma_j,
    )
