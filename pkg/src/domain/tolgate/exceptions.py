from dataclasses import dataclass

from src.domain.base.exceptions import DomainException


@dataclass(eq=False)
class GateException(DomainException):
    @property
    def title(self) -> str:
        return "Tolerance gate error"


@dataclass(eq=False)
class EmptyBatchException(GateException, ValueError):
    @property
    def title(self) -> str:
        return "Cannot summarize an empty batch of layer inputs"


@dataclass(eq=False)
class GateCountException(GateException, ValueError):
    expected: int
    received: int

    @property
    def title(self) -> str:
        return f"Expected {self.expected} per-layer values, received {self.received}"
