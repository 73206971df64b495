from dataclasses import dataclass

from src.domain.base.exceptions import DomainException


@dataclass(eq=False)
class RunException(DomainException):
    @property
    def title(self) -> str:
        return "Run directory error"


@dataclass(eq=False)
class RunAlreadyExistsException(RunException):
    path: str

    @property
    def title(self) -> str:
        return f"Run directory {self.path} already holds a manifest; refusing to overwrite"
