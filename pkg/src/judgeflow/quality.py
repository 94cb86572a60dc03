"""Per-class quality and error model of the worker/judge/human pipeline.

A worker output is correct with probability ``1 - alpha``.  The screening
judge makes two kinds of classification mistakes:

* false rejection (type I, rate ``beta_I``): a correct output is sent back
  to the worker for pointless rework;
* false acceptance (type II, rate ``beta_II``): an incorrect output passes
  through, consuming judge time without helping the reviewers.

Everything downstream (the steady-state LPs, the phase formulas, the
simulator coin flips) consumes only three derived quantities:

    p_pass = (1 - alpha) (1 - beta_I) + alpha beta_II
    p_rej  = 1 - p_pass
    q_acc  = (1 - alpha)(1 - beta_I) / p_pass     (posterior correctness
                                                   given acceptance)

The judge helps iff q_acc > 1 - alpha, which for alpha in (0, 1) is
equivalent to beta_I + beta_II < 1.

The feedback extension models rework informed by a human rejection: the
re-attempt fails at the reduced rate ``kappa * alpha``, so the judge sees a
different rejection probability for those tasks.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

from .errors import AssumptionError, DegenerateJudgeError, DomainError

#: Absolute tolerance for equality comparisons on derived probabilities.
PROB_TOL = 1e-12


def _check_prob(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class QualityParams:
    """Raw error primitives of one task class."""

    alpha: float
    beta_I: float
    beta_II: float

    def __post_init__(self) -> None:
        _check_prob("alpha", self.alpha)
        _check_prob("beta_I", self.beta_I)
        _check_prob("beta_II", self.beta_II)


@dataclass(frozen=True)
class QualityDerived:
    """Probabilities derived once per class and cached."""

    p_pass: float
    p_rej: float
    q_acc: float
    judge_improves: bool


@dataclass(frozen=True)
class FeedbackParams:
    """Feedback-task primitives: reduced failure rate and judge rejection."""

    kappa: float
    p_rej_fb: float

    @property
    def p_pass_fb(self) -> float:
        return 1.0 - self.p_rej_fb


@functools.lru_cache(maxsize=None)
def derive_quality(params: QualityParams) -> QualityDerived:
    """Compute (p_pass, p_rej, q_acc, judge_improves) for one class.

    p_rej is defined as ``1 - p_pass`` so the pair sums to one exactly.
    The degenerate point p_pass = 0 with alpha > 0 (the judge rejects
    everything that could be wrong) has no defined posterior and raises.
    With alpha = 0 the same point forces beta_I = 1; the zero mass of
    accepted outputs would all be correct, so q_acc := 1 there and the
    judge does not improve anything.
    """
    a, bI, bII = params.alpha, params.beta_I, params.beta_II
    p_pass = (1.0 - a) * (1.0 - bI) + a * bII
    p_rej = 1.0 - p_pass
    if p_pass <= 0.0:
        if a > 0.0:
            raise DegenerateJudgeError(
                f"judge rejects every output (p_pass = 0) at {params}; "
                "posterior correctness q_acc is undefined"
            )
        q_acc = 1.0
    else:
        q_acc = (1.0 - a) * (1.0 - bI) / p_pass
    judge_improves = q_acc - (1.0 - a) > PROB_TOL
    return QualityDerived(p_pass=p_pass, p_rej=p_rej, q_acc=q_acc,
                          judge_improves=judge_improves)


def derive_feedback(params: QualityParams, kappa: float) -> FeedbackParams:
    """Judge rejection probability for feedback tasks.

    A feedback re-attempt is wrong with probability ``kappa * alpha``, so

        p_rej_fb = (1 - kappa alpha) beta_I + kappa alpha (1 - beta_II).
    """
    if not (0.0 < kappa < 1.0):
        raise DomainError(f"kappa must lie in (0, 1), got {kappa!r}")
    ka = kappa * params.alpha
    p_rej_fb = (1.0 - ka) * params.beta_I + ka * (1.0 - params.beta_II)
    return FeedbackParams(kappa=kappa, p_rej_fb=p_rej_fb)


def feedback_accept_correct_prob(params: QualityParams, kappa: float) -> float:
    """Posterior correctness of a judge-accepted feedback task."""
    fb = derive_feedback(params, kappa)
    ka = kappa * params.alpha
    if fb.p_pass_fb <= 0.0:
        if ka > 0.0:
            raise DegenerateJudgeError(
                "judge rejects every feedback output; posterior undefined"
            )
        return 1.0
    return (1.0 - ka) * (1.0 - params.beta_I) / fb.p_pass_fb


def feedback_priority_condition(params: QualityParams, kappa: float) -> str:
    """Which task type should get scarce judge capacity first.

    Returns ``"fresh_first"`` when

        1 - beta_II > (1 - beta_I - beta_II) (alpha^2 kappa + alpha),

    ``"feedback_first"`` under the strict reverse, and ``"indifferent"``
    on equality within PROB_TOL.  Requires an informative judge
    (beta_I + beta_II < 1).
    """
    if not (0.0 < kappa < 1.0):
        raise DomainError(f"kappa must lie in (0, 1), got {kappa!r}")
    a, bI, bII = params.alpha, params.beta_I, params.beta_II
    if not bI + bII < 1.0:
        raise AssumptionError(
            "judge_improves", f"beta_I + beta_II = {bI + bII} >= 1"
        )
    lhs = 1.0 - bII
    rhs = (1.0 - bI - bII) * (a * a * kappa + a)
    if abs(lhs - rhs) <= PROB_TOL:
        return "indifferent"
    return "fresh_first" if lhs > rhs else "feedback_first"
