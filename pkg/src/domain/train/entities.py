from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from src.domain.base.entities import BaseEntity, BaseEntityWithEvents
from src.domain.train.events import BatchSkippedEvent, EpochCompletedEvent, TrainingFinishedEvent
from src.domain.train.exceptions import TrainingAbortedException
from src.domain.train.values import EpochMetrics, GateRecord, SolveRecord, TrainConfig


@dataclass
class AdamState(BaseEntity):
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, size: int) -> AdamState:
        return cls(m=np.zeros(size), v=np.zeros(size))

    def to_dict(self) -> dict:
        return {"step": self.step, "size": int(self.m.size)}


@dataclass
class TrainingSession(BaseEntityWithEvents):
    """Per-run training record: epoch metrics, raw solve and gate logs, and skipped batches."""

    config: TrainConfig
    run_dir: str = ""
    history: list[EpochMetrics] = field(default_factory=list)
    solves: list[SolveRecord] = field(default_factory=list)
    gates: list[GateRecord] = field(default_factory=list)
    skipped: dict[int, int] = field(default_factory=dict)
    alpha: float | None = None

    def __post_init__(self):
        if self.alpha is None:
            self.alpha = self.config.tolerance.alpha

    @property
    def last(self) -> EpochMetrics | None:
        return self.history[-1] if self.history else None

    def record_solves(self, records: list[SolveRecord]) -> None:
        self.solves.extend(records)

    def record_gates(self, records: list[GateRecord]) -> None:
        self.gates.extend(records)

    def epoch_solves(self, epoch: int) -> list[SolveRecord]:
        return [record for record in self.solves if record.epoch == epoch]

    def epoch_gates(self, epoch: int) -> list[GateRecord]:
        return [record for record in self.gates if record.epoch == epoch]

    def mean_nfe(self, epoch: int) -> float:
        records = self.epoch_solves(epoch)
        if not records:
            return float("nan")
        return float(np.mean([record.nfe for record in records]))

    def skip_batch(self, epoch: int, batch: int, reason: str) -> None:
        self.skipped[epoch] = self.skipped.get(epoch, 0) + 1
        self.register_event(BatchSkippedEvent(run_dir=self.run_dir, epoch=epoch, batch=batch, reason=reason))

    def check_skips(self, epoch: int, total_batches: int) -> None:
        skipped = self.skipped.get(epoch, 0)
        if total_batches and skipped > self.config.max_skip_fraction * total_batches:
            raise TrainingAbortedException(epoch=epoch, skipped=skipped, total=total_batches)

    def complete_epoch(self, metrics: EpochMetrics) -> None:
        self.history.append(metrics)
        self.register_event(
            EpochCompletedEvent(
                run_dir=self.run_dir,
                metrics=metrics.to_row(),
                wall_time=metrics.wall_time,
                solves=[record.to_row() for record in self.epoch_solves(metrics.epoch)],
                gates=[record.to_row() for record in self.epoch_gates(metrics.epoch)],
            )
        )

    def finish(self) -> None:
        self.register_event(
            TrainingFinishedEvent(
                run_dir=self.run_dir,
                task=self.config.task,
                epochs=len(self.history),
                final_metrics=self.last.to_row() if self.last else {},
            )
        )

    def to_dict(self) -> dict:
        return {
            "task": self.config.task,
            "epochs": len(self.history),
            "skipped": dict(self.skipped),
            "alpha": self.alpha,
        }
