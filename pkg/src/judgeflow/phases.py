"""Closed-form regime analysis of optimal judge allocation.

All capacities are normalized to worker-output units:

    H = (mu_h/mu_w) n_h,   J = (mu_j/mu_w) n_j,   J_eff = min(n_w, J).

Single class, overloaded, judge helpful: the optimal routing fraction
phi* has four phases in n_h, separated by

    t1 = (mu_w/mu_h) p_pass J_eff        (humans can absorb full screening)
    t2 = (mu_w/mu_h) (n_w - p_rej J_eff) (workers saturate)
    t3 = (mu_w/mu_h) n_w                 (humans can absorb everything direct)

with phi* = 1 below t1, J_eff/(H + p_rej J_eff) on [t1, t2] (judge
saturated), (n_w - H)/(p_rej n_w) on [t2, t3] (screening actively reduced
to protect workers from rework), and 0 beyond t3.  When workers are
abundant (n_w >= H + p_rej J) only the first two regimes survive.

Two classes with symmetric worker-side parameters: priority is governed
by q_acc (quality per unit of human attention, decisive when humans are
scarce) and eta = beta_I / p_rej (wasted rework per judge rejection,
decisive when workers are scarce).  When the two indices disagree the
priority reverses as n_h grows, passing through a complementarity
interval where both classes share the judge; the interval endpoints are
closed-form in the system parameters.

Every closed form here is cross-checkable against the LP through
``verify_phase_against_lp``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import AssumptionError, UsageError
from .fluid import ClassParams, Instance, solve_steady_state
from .quality import derive_quality

_EQ_TOL = 1e-12
_BOUNDARY_TOL = 1e-6
ACTIVE_TOL = 1e-9


@dataclass(frozen=True)
class NormalizedCapacities:
    H: float
    J: float
    J_eff: float


@dataclass(frozen=True)
class SingleClassThresholds:
    t1: float
    t2: float
    t3: float

    def as_tuple(self) -> tuple:
        return (self.t1, self.t2, self.t3)


@dataclass(frozen=True)
class PhaseReport:
    regime: str  # limited_workers | abundant_workers | counterproductive | not_overloaded
    phase: int | None
    phi_star: float | None
    x_star: float | None
    v_star: float | None
    thresholds: SingleClassThresholds
    caps: NormalizedCapacities
    aw_threshold: float | None = None
    knife_edge: bool = False


@dataclass(frozen=True)
class TwoClassReport:
    q_acc: tuple
    eta: tuple
    c: tuple
    k_q: int  # 1-based class indices
    k_eta: int
    k_c: int
    degenerate: bool
    lower_threshold: float | None
    upper_threshold: float | None
    complementarity_interval: tuple | None
    interval_kind: str | None  # worker_slack | worker_binding
    caps: NormalizedCapacities
    p_pass: tuple
    p_rej: tuple
    n_w: float
    wh_ratio: float  # mu_w / mu_h


@dataclass(frozen=True)
class PointCheck:
    n_h: float
    expected: object
    actual: object
    match: bool
    boundary: bool = False


@dataclass(frozen=True)
class VerificationReport:
    rows: tuple
    ok: bool

    @property
    def mismatches(self) -> tuple:
        return tuple(r for r in self.rows if not r.match)


def normalized_capacities(c: ClassParams, n_w: float, n_j: float, n_h: float):
    H = (c.mu_h / c.mu_w) * n_h
    J = (c.mu_j / c.mu_w) * n_j
    return NormalizedCapacities(H=H, J=J, J_eff=min(n_w, J))


def single_class_thresholds(c: ClassParams, n_w: float, n_j: float):
    d = derive_quality(c.quality)
    J_eff = min(n_w, (c.mu_j / c.mu_w) * n_j)
    wh = c.mu_w / c.mu_h
    return SingleClassThresholds(
        t1=wh * d.p_pass * J_eff,
        t2=wh * (n_w - d.p_rej * J_eff),
        t3=wh * n_w,
    )


def _is_overloaded(c: ClassParams, n_w: float) -> bool:
    if c.quality.alpha >= 1.0:
        return True  # no effective service; the queue can only back up
    return c.lam / (c.mu_w * (1.0 - c.quality.alpha)) >= n_w - 1e-9


def _operating_point(d, caps: NormalizedCapacities, n_w: float):
    """Optimal (x*, v*, phase) of the overloaded single-class program.

    Valid for any J_eff <= n_w; the four cases partition H.
    """
    H, J_eff = caps.H, caps.J_eff
    if H <= d.p_pass * J_eff:
        v = H / d.p_pass if d.p_pass > 0 else 0.0
        return v, v, 1
    if H <= n_w - d.p_rej * J_eff:
        return H + d.p_rej * J_eff, J_eff, 2
    if H <= n_w:
        v = (n_w - H) / d.p_rej if d.p_rej > 0 else 0.0
        return n_w, v, 3
    return n_w, 0.0, 4


def single_class_phase(instance: Instance) -> PhaseReport:
    """Classify the regime of a one-class instance at its configured n_h."""
    if len(instance.classes) != 1:
        raise UsageError("single-class phase analysis needs exactly 1 class")
    c = instance.classes[0]
    d = derive_quality(c.quality)
    caps = normalized_capacities(c, instance.n_w, instance.n_j, instance.n_h)
    thresholds = single_class_thresholds(c, instance.n_w, instance.n_j)
    wh = c.mu_w / c.mu_h

    if not _is_overloaded(c, instance.n_w):
        return PhaseReport(
            regime="not_overloaded",
            phase=None,
            phi_star=None,
            x_star=None,
            v_star=None,
            thresholds=thresholds,
            caps=caps,
        )

    gap = d.q_acc - (1.0 - c.quality.alpha)
    if gap < -_EQ_TOL:
        x = min(caps.H, instance.n_w)
        return PhaseReport(
            regime="counterproductive",
            phase=None,
            phi_star=0.0,
            x_star=x,
            v_star=0.0,
            thresholds=thresholds,
            caps=caps,
        )
    knife_edge = abs(gap) <= _EQ_TOL

    abundant = instance.n_w >= caps.H + d.p_rej * caps.J
    x, v, phase = _operating_point(d, caps, instance.n_w)
    phi = 0.0 if x <= 1e-12 else v / x
    if knife_edge:
        # Non-unique optimum; zero routing is the deterministic pick.
        x = min(caps.H, instance.n_w)
        return PhaseReport(
            regime="abundant_workers" if abundant else "limited_workers",
            phase=None,
            phi_star=0.0,
            x_star=x,
            v_star=0.0,
            thresholds=thresholds,
            caps=caps,
            aw_threshold=wh * d.p_pass * caps.J if abundant else None,
            knife_edge=True,
        )
    if abundant:
        # Prop-1 relabeling: only full screening / judge saturation occur.
        return PhaseReport(
            regime="abundant_workers",
            phase=1 if caps.H <= d.p_pass * caps.J else 2,
            phi_star=phi,
            x_star=x,
            v_star=v,
            thresholds=thresholds,
            caps=caps,
            aw_threshold=wh * d.p_pass * caps.J,
        )
    return PhaseReport(
        regime="limited_workers",
        phase=phase,
        phi_star=phi,
        x_star=x,
        v_star=v,
        thresholds=thresholds,
        caps=caps,
    )


def _require_symmetric(name: str, a: float, b: float) -> None:
    if abs(a - b) > 1e-12 * max(1.0, abs(a), abs(b)):
        raise AssumptionError(
            f"symmetric_{name}", f"classes differ: {a!r} vs {b!r}"
        )


def two_class_report(instance: Instance) -> TwoClassReport:
    """Priority indices, reversal thresholds, and the complementarity zone.

    Requires the two-class symmetric overloaded regime: equal worker-side
    parameters (mu_w, alpha) across classes -- the derivation also pins
    mu_j, mu_h and the reward weight -- both classes overloaded and
    judge-improving, and scarce judge capacity (J_eff < n_w).
    """
    if len(instance.classes) != 2:
        raise UsageError("two-class analysis needs exactly 2 classes")
    c1, c2 = instance.classes
    _require_symmetric("mu_w", c1.mu_w, c2.mu_w)
    _require_symmetric("alpha", c1.quality.alpha, c2.quality.alpha)
    _require_symmetric("mu_j", c1.mu_j, c2.mu_j)
    _require_symmetric("mu_h", c1.mu_h, c2.mu_h)
    _require_symmetric("reward", c1.reward, c2.reward)
    for i, c in enumerate(instance.classes):
        if not _is_overloaded(c, instance.n_w):
            raise AssumptionError(
                "overloaded",
                f"class {i + 1}: lambda/(mu_w(1-alpha)) = "
                f"{c.lam / (c.mu_w * (1 - c.quality.alpha)):.6g} < n_w = {instance.n_w}",
            )
    ders = instance.derived()
    for i, d in enumerate(ders):
        if not d.judge_improves:
            raise AssumptionError("judge_improves", f"class {i + 1} fails")
    caps = normalized_capacities(c1, instance.n_w, instance.n_j, instance.n_h)
    if not caps.J_eff < instance.n_w:
        raise AssumptionError(
            "judge_scarce", f"J_eff = {caps.J_eff} >= n_w = {instance.n_w}"
        )

    q_acc = tuple(d.q_acc for d in ders)
    p_pass = tuple(d.p_pass for d in ders)
    p_rej = tuple(d.p_rej for d in ders)
    eta = tuple(c.quality.beta_I / d.p_rej for c, d in zip(instance.classes, ders))
    cgain = tuple(d.p_rej - c.quality.beta_I for c, d in zip(instance.classes, ders))
    wh = c1.mu_w / c1.mu_h

    tied = (
        abs(q_acc[0] - q_acc[1]) <= _EQ_TOL or abs(eta[0] - eta[1]) <= _EQ_TOL
    )
    k_q = 1 + (1 if q_acc[1] > q_acc[0] else 0)
    k_eta = 1 + (1 if eta[1] < eta[0] else 0)
    k_c = 1 + (1 if cgain[1] > cgain[0] else 0)
    degenerate = tied or k_q == k_eta
    if degenerate:
        return TwoClassReport(
            q_acc=q_acc,
            eta=eta,
            c=cgain,
            k_q=k_q,
            k_eta=k_eta,
            k_c=k_c,
            degenerate=True,
            lower_threshold=None,
            upper_threshold=None,
            complementarity_interval=None,
            interval_kind=None,
            caps=caps,
            p_pass=p_pass,
            p_rej=p_rej,
            n_w=instance.n_w,
            wh_ratio=wh,
        )

    lower = wh * p_pass[k_q - 1] * caps.J_eff
    if k_q == k_c:
        wb_lo = wh * (instance.n_w - p_rej[k_q - 1] * caps.J_eff)
        wb_hi = wh * (instance.n_w - p_rej[k_eta - 1] * caps.J_eff)
        interval = (wb_lo, wb_hi)
        kind = "worker_binding"
        upper = wb_hi
    else:
        # With two classes and k_q != k_eta, k_c != k_q means k_c == k_eta.
        upper = wh * p_pass[k_c - 1] * caps.J_eff
        interval = (lower, upper)
        kind = "worker_slack"
    return TwoClassReport(
        q_acc=q_acc,
        eta=eta,
        c=cgain,
        k_q=k_q,
        k_eta=k_eta,
        k_c=k_c,
        degenerate=False,
        lower_threshold=lower,
        upper_threshold=upper,
        complementarity_interval=interval,
        interval_kind=kind,
        caps=caps,
        p_pass=p_pass,
        p_rej=p_rej,
        n_w=instance.n_w,
        wh_ratio=wh,
    )


def predicted_active_classes(report: TwoClassReport, n_h: float) -> frozenset:
    """Classes with v* > 0 predicted by the closed forms (1-based)."""
    if report.degenerate:
        raise UsageError("no closed-form active sets in the degenerate case")
    wh = report.wh_ratio
    if n_h <= ACTIVE_TOL:
        return frozenset()
    if n_h >= wh * report.n_w:
        return frozenset()
    lo, hi = report.complementarity_interval
    if n_h <= lo:
        return frozenset({report.k_q})
    if n_h < hi:
        return frozenset({1, 2})
    return frozenset({report.k_eta})


def interior_allocation(report: TwoClassReport, n_h: float) -> tuple:
    """Closed-form (v1*, v2*) inside the complementarity interval."""
    if report.degenerate:
        raise UsageError("no interior allocation in the degenerate case")
    lo, hi = report.complementarity_interval
    if not (lo < n_h < hi):
        raise UsageError(f"n_h = {n_h} outside complementarity interval ({lo}, {hi})")
    J_eff = report.caps.J_eff
    H = n_h / report.wh_ratio
    if report.interval_kind == "worker_slack":
        v1 = (H - report.p_pass[1] * J_eff) / (report.p_pass[0] - report.p_pass[1])
    else:
        R = report.n_w - H
        v1 = (R - report.p_rej[1] * J_eff) / (report.p_rej[0] - report.p_rej[1])
    return (v1, J_eff - v1)


def _closed_form_phi(instance: Instance, n_h: float) -> float:
    report = single_class_phase(instance.with_nh(n_h))
    if report.phi_star is None:
        raise AssumptionError(
            "overloaded", "closed forms are not emitted off the overloaded regime"
        )
    return report.phi_star


def verify_phase_against_lp(
    instance: Instance, n_h_grid, phi_tol: float = 1e-8
) -> VerificationReport:
    """Cross-validate closed forms against the LP on a grid of n_h values.

    Single class: |phi*_closed - phi*_LP| <= phi_tol at every point.
    Two classes: the set {i : v_i* > 1e-9} from the LP must match the
    closed-form prediction; grid points within 1e-6 of a threshold are
    accepted either way (the optimum is non-unique on the boundary).
    """
    rows = []
    if len(instance.classes) == 1:
        for n_h in n_h_grid:
            expected = _closed_form_phi(instance, n_h)
            actual = solve_steady_state(instance.with_nh(n_h)).phi[0]
            rows.append(
                PointCheck(
                    n_h=float(n_h),
                    expected=expected,
                    actual=actual,
                    match=abs(expected - actual) <= phi_tol,
                )
            )
    elif len(instance.classes) == 2:
        report = two_class_report(instance)
        thresholds = [
            report.lower_threshold,
            report.upper_threshold,
            *report.complementarity_interval,
            report.wh_ratio * report.n_w,
        ]
        for n_h in n_h_grid:
            expected = predicted_active_classes(report, n_h)
            sol = solve_steady_state(instance.with_nh(n_h))
            actual = frozenset(
                i + 1 for i, v in enumerate(sol.v) if v > ACTIVE_TOL
            )
            boundary = any(abs(n_h - t) < _BOUNDARY_TOL for t in thresholds)
            rows.append(
                PointCheck(
                    n_h=float(n_h),
                    expected=expected,
                    actual=actual,
                    match=(expected == actual) or boundary,
                    boundary=boundary,
                )
            )
    else:
        raise UsageError("closed-form analysis requires 1 or 2 classes")
    return VerificationReport(rows=tuple(rows), ok=all(r.match for r in rows))
