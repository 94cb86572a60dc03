"""Admission and routing policies over the simulator's count state.

A policy owns two decisions:

* routing: when a worker finishes a task, send the output to the judge
  with a fixed per-class probability (phi for fresh tasks, phi_fb for
  feedback tasks);
* worker admission: when worker capacity frees up, which waiting class
  (if any) enters service.

``fluid_tracking`` admits class i only while its in-service count is
strictly below the scaled fluid target n * x_i*, deliberately idling
workers to keep capacity in reserve for rework; the greedy variants
admit any waiting task.  The judge and human pools are always served
work-conserving FCFS and are not policy-controlled.

Routing fractions and targets come from the fluid solutions at policy
construction time; policies never re-solve anything mid-run.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .fluid import FeedbackFluidSolution, FluidSolution

KINDS = (
    "fluid_tracking",
    "greedy_optimal",
    "always_judge",
    "never_judge",
    "fluid_tracking_feedback",
)
TIEBREAKS = ("round_robin", "fcfs", "max_deficit")

#: Kinds whose worker admission ignores targets (work-conserving).
GREEDY_KINDS = ("greedy_optimal", "always_judge", "never_judge")


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    targets: tuple  # per-class fluid in-service targets (fresh+feedback combined)
    phi: tuple
    phi_fb: tuple = ()
    admission_tiebreak: str = "round_robin"

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise DomainError(f"unknown policy kind {self.kind!r}")
        if self.admission_tiebreak not in TIEBREAKS:
            raise DomainError(f"unknown tiebreak {self.admission_tiebreak!r}")
        for p in (*self.phi, *self.phi_fb):
            if not (0.0 <= p <= 1.0):
                raise DomainError(f"routing fraction {p!r} outside [0, 1]")
        if any(t < 0 for t in self.targets):
            raise DomainError("targets must be >= 0")
        if self.kind == "fluid_tracking_feedback" and len(self.phi_fb) != len(self.phi):
            raise DomainError("feedback policy needs phi_fb per class")

    @property
    def n_classes(self) -> int:
        return len(self.phi)


def fluid_tracking(solution: FluidSolution, tiebreak: str = "round_robin") -> PolicySpec:
    return PolicySpec(
        kind="fluid_tracking",
        targets=solution.x,
        phi=solution.phi,
        admission_tiebreak=tiebreak,
    )


def greedy_optimal(solution: FluidSolution, tiebreak: str = "round_robin") -> PolicySpec:
    return PolicySpec(
        kind="greedy_optimal",
        targets=solution.x,
        phi=solution.phi,
        admission_tiebreak=tiebreak,
    )


def always_judge(n_classes: int, tiebreak: str = "round_robin") -> PolicySpec:
    return PolicySpec(
        kind="always_judge",
        targets=(0.0,) * n_classes,
        phi=(1.0,) * n_classes,
        admission_tiebreak=tiebreak,
    )


def never_judge(n_classes: int, tiebreak: str = "round_robin") -> PolicySpec:
    return PolicySpec(
        kind="never_judge",
        targets=(0.0,) * n_classes,
        phi=(0.0,) * n_classes,
        admission_tiebreak=tiebreak,
    )


def fluid_tracking_feedback(
    solution: FeedbackFluidSolution, tiebreak: str = "round_robin"
) -> PolicySpec:
    return PolicySpec(
        kind="fluid_tracking_feedback",
        targets=tuple(x + xf for x, xf in zip(solution.x, solution.x_fb)),
        phi=solution.phi,
        phi_fb=solution.phi_fb,
        admission_tiebreak=tiebreak,
    )


def route_on_worker_completion(spec: PolicySpec, class_index: int, task_kind: str, rng):
    """Destination of a finished worker output: "judge" or "human_direct"."""
    if task_kind == "feedback":
        p = spec.phi_fb[class_index]
    else:
        p = spec.phi[class_index]
    return "judge" if rng.random() < p else "human_direct"


def _pick(spec: PolicySpec, candidates, weights, deficits, rr_cursor: int, rng):
    """One admission choice among candidate classes, per the tiebreak."""
    if len(candidates) == 1:
        return candidates[0]
    if spec.admission_tiebreak == "round_robin":
        n = spec.n_classes
        return min(candidates, key=lambda i: (i - rr_cursor) % n)
    if spec.admission_tiebreak == "fcfs":
        # Count-state surrogate for FCFS across classes: each waiting task
        # is equally likely to be the oldest, so sample by queue length.
        total = sum(weights[i] for i in candidates)
        u = rng.random() * total
        for i in candidates:
            u -= weights[i]
            if u < 0:
                return i
        return candidates[-1]
    return max(candidates, key=lambda i: (deficits[i], -i))


def admit_on_capacity_free(spec: PolicySpec, state, scale_n: int, rng, rr_cursor: int = 0):
    """Ordered worker admissions while servers are free and classes admissible.

    ``state`` needs attributes Qw, X, cap_w (and Qw_fb, X_fb for the
    feedback policy).  Returns ``(decisions, rr_cursor)`` where each
    decision is ``(class_index, "fresh" | "feedback")``.  This is the
    reference implementation; the simulator inlines the same logic.
    """
    n = spec.n_classes
    Qw = list(state.Qw)
    X = list(state.X)
    fb = spec.kind == "fluid_tracking_feedback"
    Qw_fb = list(state.Qw_fb) if fb else [0] * n
    X_fb = list(state.X_fb) if fb else [0] * n
    busy = sum(X) + sum(X_fb)
    greedy = spec.kind in GREEDY_KINDS
    targets = [t * scale_n for t in spec.targets]
    decisions = []
    while busy < state.cap_w:
        def admissible(queue, combined=fb):
            out = []
            for i in range(n):
                if queue[i] <= 0:
                    continue
                if greedy:
                    out.append(i)
                elif (X[i] + X_fb[i] if combined else X[i]) < targets[i]:
                    out.append(i)
            return out

        kind = "fresh"
        cands = admissible(Qw_fb) if fb else []
        if cands:
            kind = "feedback"
            weights, deficits = Qw_fb, [targets[i] - X[i] - X_fb[i] for i in range(n)]
        else:
            cands = admissible(Qw)
            if greedy:
                weights, deficits = Qw, Qw
            else:
                weights = Qw
                deficits = [targets[i] - X[i] - (X_fb[i] if fb else 0) for i in range(n)]
        if not cands:
            break
        i = _pick(spec, cands, weights, deficits, rr_cursor, rng)
        rr_cursor = (i + 1) % n
        if kind == "feedback":
            Qw_fb[i] -= 1
            X_fb[i] += 1
        else:
            Qw[i] -= 1
            X[i] += 1
        busy += 1
        decisions.append((i, kind))
    return decisions, rr_cursor
