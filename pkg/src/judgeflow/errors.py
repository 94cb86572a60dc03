"""Semantic exception hierarchy shared across the package."""

from __future__ import annotations


class JudgeflowError(Exception):
    """Base class for every error raised by this package."""


class DomainError(JudgeflowError, ValueError):
    """An input violates a documented contract (range, shape, sign)."""


class UsageError(JudgeflowError):
    """An operation was called on an object it does not apply to."""


class DegenerateJudgeError(DomainError):
    """Judge rejects everything (p_pass = 0) while the worker can still err.

    The posterior correctness of an accepted output is undefined in this
    regime, so downstream optimization must not proceed silently.
    """


class OverloadWithoutAbandonmentError(DomainError):
    """Steady state does not exist: zero patience and arrivals exceed service.

    Raised when recovering the work-queue mass for a class with theta = 0
    whose inflow/outflow balance cannot close.
    """


class AssumptionError(JudgeflowError):
    """A closed-form result was requested outside its proven assumptions."""

    def __init__(self, assumption: str, detail: str = ""):
        self.assumption = assumption
        msg = f"assumption violated: {assumption}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class LpStructureError(DomainError):
    """The LP is malformed: mismatched dimensions or non-finite data."""


class SimulationError(JudgeflowError):
    """The stochastic simulator detected an impossible or stuck state."""
