import math

from dataclasses import dataclass

from src.domain.train.events import BatchSkippedEvent, EpochCompletedEvent, TrainingFinishedEvent
from src.domain.train.values import GATES_COLUMNS, METRICS_COLUMNS, SOLVES_COLUMNS
from src.infrastructure.logger_adapter.logger import init_logger
from src.infrastructure.storage.uows.run_uow import TelemetryUnitOfWork
from src.logic.events.base import EventHandler

logger = init_logger(__name__)

METRICS_TABLE = "metrics.csv"
SOLVES_TABLE = "solves.csv"
GATES_TABLE = "gates.csv"


def _fmt(value) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.4f}"
    return str(value)


@dataclass
class EpochCompletedEventHandler(EventHandler[EpochCompletedEvent]):
    uow: TelemetryUnitOfWork

    async def handle(self, event: EpochCompletedEvent) -> None:
        metrics = event.metrics
        logger.info(
            f"epoch {metrics['epoch']}: train_nll={_fmt(metrics['train_nll'])} "
            f"test_nll={_fmt(metrics['test_nll'])} test_err={_fmt(metrics['test_err'])} "
            f"mean_nfe={_fmt(metrics['mean_nfe'])} lr={metrics['lr']:g} ({event.wall_time:.1f}s)"
        )
        async with self.uow.at(event.run_dir):
            self.uow.tables.append(METRICS_TABLE, METRICS_COLUMNS, [metrics])
            self.uow.tables.append(SOLVES_TABLE, SOLVES_COLUMNS, event.solves)
            if event.gates:
                self.uow.tables.append(GATES_TABLE, GATES_COLUMNS, event.gates)
            await self.uow.commit()


@dataclass
class BatchSkippedEventHandler(EventHandler[BatchSkippedEvent]):
    uow: TelemetryUnitOfWork

    async def handle(self, event: BatchSkippedEvent) -> None:
        logger.warning(f"epoch {event.epoch}, batch {event.batch} skipped: {event.reason}")


@dataclass
class TrainingFinishedEventHandler(EventHandler[TrainingFinishedEvent]):
    uow: TelemetryUnitOfWork

    async def handle(self, event: TrainingFinishedEvent) -> None:
        final = event.final_metrics
        logger.info(
            f"{event.task} finished after {event.epochs} epoch(s) in {event.run_dir or '.'}: "
            f"test_nll={_fmt(final.get('test_nll', math.nan))} test_err={_fmt(final.get('test_err', math.nan))}"
        )
