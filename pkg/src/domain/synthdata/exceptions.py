from dataclasses import dataclass

from src.domain.base.exceptions import DomainException


@dataclass(eq=False)
class SynthDataException(DomainException):
    @property
    def title(self) -> str:
        return "Synthetic data error"


@dataclass(eq=False)
class InvalidSpecException(SynthDataException, ValueError):
    field: str
    value: object

    @property
    def title(self) -> str:
        return f"Invalid dataset setting {self.field}={self.value!r}"


@dataclass(eq=False)
class OddCurveCountException(SynthDataException, ValueError):
    n_curves: int

    @property
    def title(self) -> str:
        return f"The spiral corpus needs an even number of curves (half per direction), got {self.n_curves}"
