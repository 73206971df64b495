from dataclasses import dataclass, field

from src.domain.base.exceptions import DomainException


@dataclass(eq=False)
class TrainException(DomainException):
    @property
    def title(self) -> str:
        return "Training error"


@dataclass(eq=False)
class TrainingException(TrainException):
    """Non-finite gradient; ``diagnostics`` names the affected parameters."""

    epoch: int
    batch: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def title(self) -> str:
        names = ", ".join(self.diagnostics.get("parameters", [])) or "unknown parameters"
        return f"Non-finite gradient at epoch {self.epoch}, batch {self.batch} in {names}"


@dataclass(eq=False)
class TrainingAbortedException(TrainException):
    epoch: int
    skipped: int
    total: int

    @property
    def title(self) -> str:
        return (
            f"Aborted at epoch {self.epoch}: {self.skipped} of {self.total} batches were skipped "
            f"after solver failures"
        )


@dataclass(eq=False)
class ScheduleException(TrainException, ValueError):
    schedule: object

    @property
    def title(self) -> str:
        return f"Learning-rate schedule {self.schedule!r} must be positive and non-increasing"


@dataclass(eq=False)
class TrainConfigException(TrainException, ValueError):
    field: str
    value: object

    @property
    def title(self) -> str:
        return f"Invalid training setting {self.field}={self.value!r}"


@dataclass(eq=False)
class UnsupportedModelException(TrainException, ValueError):
    detail: str

    @property
    def title(self) -> str:
        return f"Operation not supported for this model: {self.detail}"


@dataclass(eq=False)
class CheckpointLayoutException(TrainException, ValueError):
    detail: str

    @property
    def title(self) -> str:
        return f"Checkpoint does not match the model built from its config: {self.detail}"
