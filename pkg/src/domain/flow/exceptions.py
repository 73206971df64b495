from dataclasses import dataclass

from src.domain.base.exceptions import DomainException
from src.domain.odesolve.exceptions import SolverDivergenceException, SolverException
from src.domain.odesolve.values import SolveStats


@dataclass(eq=False)
class FlowException(DomainException):
    @property
    def title(self) -> str:
        return "Flow error"


@dataclass(eq=False)
class TraceDimensionException(FlowException, ValueError):
    dim: int
    limit: int

    @property
    def title(self) -> str:
        return f"Exact trace supports dimension <= {self.limit}, got {self.dim}; use the hutchinson trace mode"


@dataclass(eq=False)
class FlowStructureException(FlowException, ValueError):
    detail: str

    @property
    def title(self) -> str:
        return f"Invalid flow stack: {self.detail}"


@dataclass(eq=False)
class LayerSolveException(FlowException):
    layer: int
    cause: SolverException

    @property
    def stats(self) -> SolveStats | None:
        return self.cause.stats if isinstance(self.cause, SolverDivergenceException) else None

    @property
    def title(self) -> str:
        return f"Flow layer {self.layer} failed: {self.cause.title}"
