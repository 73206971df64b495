from dataclasses import dataclass

from src.domain.base.exceptions import DomainException


@dataclass(eq=False)
class ConditionException(DomainException):
    @property
    def title(self) -> str:
        return "Conditioning error"


@dataclass(eq=False)
class InvalidLabelException(ConditionException, ValueError):
    label: object
    classes: int

    @property
    def title(self) -> str:
        return f"Label {self.label!r} is outside the range of {self.classes} classes"


@dataclass(eq=False)
class PartitionException(ConditionException, ValueError):
    d_total: int
    factor_widths: tuple[int, ...]

    @property
    def title(self) -> str:
        return (
            f"Supervised blocks {self.factor_widths} do not fit a latent code of width {self.d_total}; "
            f"each block needs width >= 1 and the blocks together at most the full width"
        )


@dataclass(eq=False)
class ConditionConfigException(ConditionException, ValueError):
    field: str
    value: object

    @property
    def title(self) -> str:
        return f"Invalid conditioning setting {self.field}={self.value!r}"
