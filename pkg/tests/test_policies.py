import random

import pytest

from judgeflow import instances
from judgeflow.errors import DomainError
from judgeflow.fluid import solve_feedback, solve_steady_state
from judgeflow.policies import (
    PolicySpec,
    admit_on_capacity_free,
    always_judge,
    fluid_tracking,
    fluid_tracking_feedback,
    greedy_optimal,
    never_judge,
    route_on_worker_completion,
)
from judgeflow.sim import SimState


def test_route_extremes():
    rng = random.Random(0)
    spec1 = PolicySpec(kind="always_judge", targets=(0.0,), phi=(1.0,))
    spec0 = PolicySpec(kind="never_judge", targets=(0.0,), phi=(0.0,))
    for _ in range(50):
        assert route_on_worker_completion(spec1, 0, "fresh", rng) == "judge"
        assert route_on_worker_completion(spec0, 0, "fresh", rng) == "human_direct"


def test_route_uses_fluid_fraction():
    phi = solve_steady_state(instances.fig2a(6.5)).phi[0]
    assert phi == pytest.approx(0.968784, abs=1e-6)
    spec = fluid_tracking(solve_steady_state(instances.fig2a(6.5)))
    rng = random.Random(42)
    draws = [
        route_on_worker_completion(spec, 0, "fresh", rng) for _ in range(20000)
    ]
    frac = draws.count("judge") / len(draws)
    assert frac == pytest.approx(phi, abs=0.01)


def _state(n_classes, cap_w, Qw, X, Qw_fb=None, X_fb=None):
    state = SimState.empty(n_classes, cap_w, 0, 0)
    state.Qw[:] = Qw
    state.X[:] = X
    if Qw_fb:
        state.Qw_fb[:] = Qw_fb
    if X_fb:
        state.X_fb[:] = X_fb
    return state


def test_no_admission_at_target():
    # Integer in-service count at (or above) the real-valued target blocks
    # admission even with waiting work: the threshold test is strict.
    sol = solve_steady_state(instances.fig2a(5.0))
    spec = fluid_tracking(sol)
    n = 10
    target = sol.x[0] * n  # 36.23...
    state = _state(1, cap_w=50, Qw=[5], X=[37])
    decisions, _ = admit_on_capacity_free(spec, state, n, random.Random(0))
    assert decisions == []
    state = _state(1, cap_w=50, Qw=[5], X=[36])
    decisions, _ = admit_on_capacity_free(spec, state, n, random.Random(0))
    assert decisions == [(0, "fresh")]
    assert int(target) == 36


def test_round_robin_alternates_between_classes():
    spec = PolicySpec(
        kind="fluid_tracking", targets=(5.0, 5.0), phi=(0.5, 0.5),
        admission_tiebreak="round_robin",
    )
    state = _state(2, cap_w=2, Qw=[4, 4], X=[0, 0])
    decisions, cursor = admit_on_capacity_free(spec, state, 1, random.Random(0))
    assert [d[0] for d in decisions] == [0, 1]
    state2 = _state(2, cap_w=1, Qw=[4, 4], X=[0, 0])
    decisions2, _ = admit_on_capacity_free(
        spec, state2, 1, random.Random(0), rr_cursor=cursor
    )
    assert [d[0] for d in decisions2] == [0]


def test_greedy_admits_anything_waiting():
    spec = greedy_optimal(solve_steady_state(instances.fig2a(5.0)))
    state = _state(1, cap_w=100, Qw=[7], X=[90])
    decisions, _ = admit_on_capacity_free(spec, state, 1, random.Random(0))
    assert len(decisions) == 7


def test_feedback_tasks_admitted_first():
    fb = solve_feedback(instances.fig4(6.5), instances.FIG4_KAPPA)
    spec = fluid_tracking_feedback(fb)
    state = _state(1, cap_w=100, Qw=[3], X=[0], Qw_fb=[2], X_fb=[0])
    n = 10
    decisions, _ = admit_on_capacity_free(spec, state, n, random.Random(0))
    assert decisions[0][1] == "feedback"
    assert decisions[1][1] == "feedback"
    assert all(d[1] == "fresh" for d in decisions[2:])
    total_target = (fb.x[0] + fb.x_fb[0]) * n
    assert len(decisions) == min(5, int(total_target) + 1)


def test_max_deficit_prefers_furthest_from_target():
    spec = PolicySpec(
        kind="fluid_tracking", targets=(6.0, 6.0), phi=(0.5, 0.5),
        admission_tiebreak="max_deficit",
    )
    state = _state(2, cap_w=10, Qw=[1, 1], X=[5, 2])
    decisions, _ = admit_on_capacity_free(spec, state, 1, random.Random(0))
    assert decisions[0][0] == 1


def test_fcfs_surrogate_weights_by_queue_length():
    spec = PolicySpec(
        kind="greedy_optimal", targets=(0.0, 0.0), phi=(0.5, 0.5),
        admission_tiebreak="fcfs",
    )
    rng = random.Random(1)
    first = []
    for _ in range(4000):
        state = _state(2, cap_w=1, Qw=[30, 10], X=[0, 0])
        decisions, _ = admit_on_capacity_free(spec, state, 1, rng)
        first.append(decisions[0][0])
    assert first.count(0) / len(first) == pytest.approx(0.75, abs=0.03)


def test_policy_validation():
    with pytest.raises(DomainError):
        PolicySpec(kind="bogus", targets=(), phi=())
    with pytest.raises(DomainError):
        PolicySpec(kind="fluid_tracking", targets=(1.0,), phi=(1.5,))
    with pytest.raises(DomainError):
        PolicySpec(
            kind="fluid_tracking", targets=(1.0,), phi=(0.5,),
            admission_tiebreak="nope",
        )
    with pytest.raises(DomainError):
        PolicySpec(kind="fluid_tracking_feedback", targets=(1.0,), phi=(0.5,))


def test_constructors_carry_fluid_values():
    sol = solve_steady_state(instances.fig2a(9.0))
    ft = fluid_tracking(sol)
    assert ft.targets == sol.x
    assert ft.phi == sol.phi
    aj = always_judge(2)
    nj = never_judge(2)
    assert aj.phi == (1.0, 1.0)
    assert nj.phi == (0.0, 0.0)
