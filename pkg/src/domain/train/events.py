from dataclasses import dataclass, field

from dataclasses_json import dataclass_json

from src.domain.base.events import BaseEvent


@dataclass_json
@dataclass(kw_only=True)
class EpochCompletedEvent(BaseEvent):
    metrics: dict
    wall_time: float = 0.0
    solves: list[dict] = field(default_factory=list)
    gates: list[dict] = field(default_factory=list)


@dataclass_json
@dataclass(kw_only=True)
class BatchSkippedEvent(BaseEvent):
    epoch: int
    batch: int
    reason: str


@dataclass_json
@dataclass(kw_only=True)
class TrainingFinishedEvent(BaseEvent):
    task: str
    epochs: int
    final_metrics: dict
