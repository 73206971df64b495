from abc import ABC, abstractmethod
from dataclasses import dataclass


@dataclass(frozen=True)
class BaseCompositeValueObject(ABC):
    """Frozen multi-field value object validated on construction."""

    def __post_init__(self):
        self.validate()

    @abstractmethod
    def validate(self): ...
