from dataclasses import dataclass

from src.logic.exceptions.base_exception import LogicException, NotFoundLogicException


@dataclass(eq=False)
class RunNotFoundLogicException(NotFoundLogicException):
    model: str = "Run directory"


@dataclass(eq=False)
class MissingArtifactLogicException(NotFoundLogicException):
    model: str = "Artifact"


@dataclass(eq=False)
class CheckpointVersionMismatchLogicException(LogicException):
    path: str
    found: object
    expected: int

    @property
    def title(self) -> str:
        return f"Checkpoint {self.path} has format version {self.found!r}, this build reads version {self.expected}"


@dataclass(eq=False)
class InvalidEvaluationModeLogicException(LogicException):
    mode: str

    @property
    def title(self) -> str:
        return f"Evaluation mode must be 'fixed:<tolerance>' or 'learned', got {self.mode!r}"


@dataclass(eq=False)
class UnknownPlotLogicException(LogicException):
    plot: str

    @property
    def title(self) -> str:
        return f"Unknown plot {self.plot!r}"
