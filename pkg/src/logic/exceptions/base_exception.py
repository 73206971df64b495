from dataclasses import dataclass


@dataclass(eq=False)
class LogicException(Exception):

    @property
    def title(self) -> str:
        return "Application error"


@dataclass(eq=False)
class NotFoundLogicException(LogicException):
    path: str
    model: str

    @property
    def title(self) -> str:
        return f"{self.model} not found: {self.path}"
