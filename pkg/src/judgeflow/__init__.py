"""judgeflow: fluid-optimal control of worker / judge / human screening networks.

The package solves the steady-state fluid programs of a three-pool
queueing network with imperfect automated screening (exact LP plus
closed-form phase and priority analysis), simulates the scaled
stochastic network exactly, and ships the Fluid-Tracking policy with
greedy baselines plus the experiment harness that reproduces the
reference sweeps.
"""

from .errors import (
    AssumptionError,
    DegenerateJudgeError,
    DomainError,
    JudgeflowError,
    LpStructureError,
    OverloadWithoutAbandonmentError,
    SimulationError,
    UsageError,
)
from .fluid import (
    CapacityPlan,
    ClassParams,
    FeedbackFluidSolution,
    FluidSolution,
    Instance,
    solve_capacity_plan,
    solve_feedback,
    solve_steady_state,
)
from .lp import LpProblem, LpSolution, solve_lp
from .phases import (
    NormalizedCapacities,
    PhaseReport,
    SingleClassThresholds,
    TwoClassReport,
    single_class_phase,
    single_class_thresholds,
    two_class_report,
    verify_phase_against_lp,
)
from .policies import (
    PolicySpec,
    admit_on_capacity_free,
    always_judge,
    fluid_tracking,
    fluid_tracking_feedback,
    greedy_optimal,
    never_judge,
    route_on_worker_completion,
)
from .quality import (
    FeedbackParams,
    QualityDerived,
    QualityParams,
    derive_feedback,
    derive_quality,
    feedback_priority_condition,
)
from .sim import SimConfig, SimMetrics, SimState, detect_instability, run

__version__ = "0.1.0"

__all__ = [
    "AssumptionError",
    "CapacityPlan",
    "ClassParams",
    "DegenerateJudgeError",
    "DomainError",
    "FeedbackFluidSolution",
    "FeedbackParams",
    "FluidSolution",
    "Instance",
    "JudgeflowError",
    "LpProblem",
    "LpSolution",
    "LpStructureError",
    "NormalizedCapacities",
    "OverloadWithoutAbandonmentError",
    "PhaseReport",
    "PolicySpec",
    "QualityDerived",
    "QualityParams",
    "SimConfig",
    "SimMetrics",
    "SimState",
    "SimulationError",
    "SingleClassThresholds",
    "TwoClassReport",
    "UsageError",
    "admit_on_capacity_free",
    "always_judge",
    "derive_feedback",
    "derive_quality",
    "detect_instability",
    "feedback_priority_condition",
    "fluid_tracking",
    "fluid_tracking_feedback",
    "greedy_optimal",
    "never_judge",
    "route_on_worker_completion",
    "run",
    "single_class_phase",
    "single_class_thresholds",
    "solve_capacity_plan",
    "solve_feedback",
    "solve_lp",
    "solve_steady_state",
    "two_class_report",
    "verify_phase_against_lp",
]
