from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from src.domain.base.exceptions import DomainException

if TYPE_CHECKING:
    from src.domain.odesolve.values import SolveStats


@dataclass(eq=False)
class SolverException(DomainException):
    @property
    def title(self) -> str:
        return "ODE solver error"


@dataclass(eq=False)
class SolverDivergenceException(SolverException):
    stats: SolveStats
    t: float
    reason: str = "step limit exceeded"

    @property
    def title(self) -> str:
        return (
            f"Solver diverged at t={self.t:.6g} ({self.reason}) after {self.stats.accepted_steps} accepted "
            f"and {self.stats.rejected_steps} rejected steps, {self.stats.nfe} evaluations"
        )


@dataclass(eq=False)
class NumericException(SolverException):
    t: float

    @property
    def title(self) -> str:
        return f"Dynamics returned a non-finite derivative at t={self.t:.6g}"


@dataclass(eq=False)
class InvalidIntervalException(SolverException, ValueError):
    times: tuple[float, ...]

    @property
    def title(self) -> str:
        return f"Integration times must be finite and strictly increasing, got {self.times}"


@dataclass(eq=False)
class SolverConfigException(SolverException, ValueError):
    field: str
    value: object

    @property
    def title(self) -> str:
        return f"Invalid solver setting {self.field}={self.value!r}"
