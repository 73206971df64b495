from dataclasses import dataclass

from src.domain.base.exceptions import DomainException


@dataclass(eq=False)
class LatentOdeException(DomainException):
    @property
    def title(self) -> str:
        return "Latent ODE error"


@dataclass(eq=False)
class SpiralDomainException(LatentOdeException, ValueError):
    t: float

    @property
    def title(self) -> str:
        return f"Clockwise spiral is undefined at t={self.t!r}; t must be positive"


@dataclass(eq=False)
class SequenceShapeException(LatentOdeException, ValueError):
    detail: str

    @property
    def title(self) -> str:
        return f"Malformed observation sequence: {self.detail}"
