import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from judgeflow.errors import AssumptionError, DegenerateJudgeError, DomainError
from judgeflow.quality import (
    QualityParams,
    derive_feedback,
    derive_quality,
    feedback_accept_correct_prob,
    feedback_priority_condition,
)

probs = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def test_derive_quality_reference_point():
    d = derive_quality(QualityParams(0.3, 0.1, 0.2))
    assert d.p_pass == pytest.approx(0.69, abs=1e-12)
    assert d.p_rej == pytest.approx(0.31, abs=1e-12)
    assert d.q_acc == pytest.approx(0.63 / 0.69, abs=1e-12)
    assert d.judge_improves


def test_derive_quality_perfect_worker():
    d = derive_quality(QualityParams(0.0, 0.0, 0.5))
    assert d.p_pass == 1.0
    assert d.p_rej == 0.0
    assert d.q_acc == 1.0
    assert not d.judge_improves  # q_acc equals 1 - alpha exactly


def test_derive_quality_lenient_judge():
    d = derive_quality(QualityParams(0.3, 0.05, 0.40))
    assert d.p_pass == pytest.approx(0.785, abs=1e-12)
    assert d.p_rej == pytest.approx(0.215, abs=1e-12)
    assert d.q_acc == pytest.approx(0.665 / 0.785, abs=1e-12)


def test_degenerate_judge_raises():
    with pytest.raises(DegenerateJudgeError):
        derive_quality(QualityParams(1.0, 1.0, 0.0))


def test_p_pass_zero_with_perfect_worker_defines_q_acc_one():
    d = derive_quality(QualityParams(0.0, 1.0, 0.0))
    assert d.p_pass == 0.0
    assert d.q_acc == 1.0
    assert not d.judge_improves


def test_param_validation():
    with pytest.raises(DomainError):
        QualityParams(-0.1, 0.0, 0.0)
    with pytest.raises(DomainError):
        QualityParams(0.5, 1.2, 0.0)


def test_derive_feedback_reference_points():
    fb = derive_feedback(QualityParams(0.3, 0.1, 0.2), 0.5)
    assert fb.p_rej_fb == pytest.approx(0.85 * 0.1 + 0.15 * 0.8, abs=1e-12)
    assert fb.p_rej_fb == pytest.approx(0.205, abs=1e-12)
    fb2 = derive_feedback(QualityParams(0.3, 0.05, 0.40), 0.5)
    assert fb2.p_rej_fb == pytest.approx(0.85 * 0.05 + 0.15 * 0.60, abs=1e-12)
    assert fb2.p_rej_fb == pytest.approx(0.1325, abs=1e-12)


def test_derive_feedback_no_errors_limit():
    # kappa * alpha = 0 via alpha = 0: only false rejections remain.
    fb = derive_feedback(QualityParams(0.0, 0.07, 0.9), 0.5)
    assert fb.p_rej_fb == pytest.approx(0.07, abs=1e-15)


def test_derive_feedback_kappa_domain():
    q = QualityParams(0.3, 0.1, 0.2)
    for bad in (0.0, 1.0, -0.5, 2.0):
        with pytest.raises(DomainError):
            derive_feedback(q, bad)


def test_feedback_priority_reference_point():
    # LHS 0.8 vs RHS 0.7 * (0.045 + 0.3) = 0.2415 -> fresh first.
    assert feedback_priority_condition(QualityParams(0.3, 0.1, 0.2), 0.5) == "fresh_first"


def test_feedback_priority_alpha_zero():
    assert feedback_priority_condition(QualityParams(0.0, 0.2, 0.3), 0.5) == "fresh_first"


def test_feedback_priority_knife_edge():
    # Solve 1 - bII = (1 - bI - bII)(a^2 k + a) for bI at fixed a, k, bII.
    a, k, bII = 0.9, 0.5, 0.1
    factor = a * a * k + a
    bI = 1.0 - bII - (1.0 - bII) / factor
    assert 0.0 <= bI <= 1.0
    verdict = feedback_priority_condition(QualityParams(a, bI, bII), k)
    assert verdict == "indifferent"


def test_feedback_priority_feedback_first_branch():
    # Large alpha with an informative judge flips the priority.
    a, k, bII = 0.95, 0.9, 0.05
    assert (1 - bII) < (1 - 0.0 - bII) * (a * a * k + a)
    assert feedback_priority_condition(QualityParams(a, 0.0, bII), k) == "feedback_first"


def test_feedback_priority_requires_informative_judge():
    with pytest.raises(AssumptionError):
        feedback_priority_condition(QualityParams(0.3, 0.6, 0.5), 0.5)


def test_feedback_accept_correct_prob():
    q = QualityParams(0.3, 0.1, 0.2)
    ka = 0.15
    p_pass_fb = (1 - ka) * 0.9 + ka * 0.2
    assert feedback_accept_correct_prob(q, 0.5) == pytest.approx(
        (1 - ka) * 0.9 / p_pass_fb, abs=1e-12
    )


@given(alpha=probs, beta_I=probs, beta_II=probs)
@settings(max_examples=300, derandomize=True)
def test_pass_reject_partition_and_posterior_identity(alpha, beta_I, beta_II):
    try:
        d = derive_quality(QualityParams(alpha, beta_I, beta_II))
    except DegenerateJudgeError:
        assert alpha > 0
        return
    assert d.p_pass + d.p_rej == 1.0
    # q_acc * p_pass = (1-alpha)(1-beta_I), the identity the reduced LP uses.
    assert d.q_acc * d.p_pass == pytest.approx(
        (1 - alpha) * (1 - beta_I), abs=1e-12
    )


@given(
    alpha=st.floats(min_value=0.01, max_value=0.99),
    beta_I=probs,
    beta_II=probs,
)
@settings(max_examples=300, derandomize=True)
def test_sign_identity_and_improvement_criterion(alpha, beta_I, beta_II):
    try:
        d = derive_quality(QualityParams(alpha, beta_I, beta_II))
    except DegenerateJudgeError:
        return
    if d.p_pass <= 0:
        return
    lhs = d.q_acc - (1 - alpha)
    rhs = d.p_rej - beta_I
    if abs(lhs) > 1e-9:
        assert math.copysign(1, lhs) == math.copysign(1, rhs)
    assert d.judge_improves == (beta_I + beta_II < 1 - 1e-9) or (
        abs(beta_I + beta_II - 1) <= 1e-9
    )


def test_derived_values_cached():
    q = QualityParams(0.3, 0.1, 0.2)
    assert derive_quality(q) is derive_quality(QualityParams(0.3, 0.1, 0.2))
