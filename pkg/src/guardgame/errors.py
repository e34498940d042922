"""Exception hierarchy shared across the package."""

from __future__ import annotations


class GuardGameError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(GuardGameError, ValueError):
    """Raised on malformed inputs (dimension mismatch, bad index, bad parameter)."""


class DegeneratePointError(GuardGameError):
    """A norm kernel vanished, so a gradient or heading is undefined."""


class CoincidentPositionsError(DegeneratePointError):
    """Attacker and defender coincide; the safe-reachable region is a point."""


class InfeasibleStartError(GuardGameError):
    """No feasible capture plan could be recovered from the initial guess."""


class MaxIterationsError(GuardGameError):
    """Iteration budget exhausted; ``last`` holds the final iterate."""

    def __init__(self, message: str, last=None):
        super().__init__(message)
        self.last = last


class SolverFailure(GuardGameError):
    """Every start of a multistart run failed."""


class UncertifiedPlanError(GuardGameError):
    """The plan does not satisfy LICQ, strict complementarity and SOSC."""


class AmbiguousPlanError(GuardGameError):
    """More than one global minimizer was found; the value gradient is undefined."""


class StageInfeasibleError(GuardGameError):
    def __init__(self, message: str, stage: int):
        super().__init__(message)
        self.stage = stage


class ConfigError(GuardGameError, ValueError):
    """Invalid configuration file or parameters; ``violations`` lists every problem."""

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = list(violations or [message])
