from dishka import Provider, Scope, provide

from src.domain.train.events import BatchSkippedEvent, EpochCompletedEvent, TrainingFinishedEvent
from src.infrastructure.storage.uows.run_uow import RunQueryUnitOfWork, RunUnitOfWork, TelemetryUnitOfWork
from src.logic.commands.data_commands import GenerateDataCommand, GenerateDataCommandHandler
from src.logic.commands.oracle_commands import RunOraclesCommand, RunOraclesCommandHandler
from src.logic.commands.report_commands import ReportCommand, ReportCommandHandler
from src.logic.commands.train_commands import (
    EvaluateCommand,
    EvaluateCommandHandler,
    TrainCommand,
    TrainCommandHandler,
)
from src.logic.events.training_events import (
    BatchSkippedEventHandler,
    EpochCompletedEventHandler,
    TrainingFinishedEventHandler,
)
from src.logic.mediator.base import Mediator
from src.logic.queries.run_queries import (
    GetRunManifestQuery,
    GetRunManifestQueryHandler,
    GetRunTableQuery,
    GetRunTableQueryHandler,
)


class LogicProvider(Provider):
    scope = Scope.APP

    @provide(scope=Scope.APP)
    def init_mediator(
        self,
        run_uow: RunUnitOfWork,
        run_query_uow: RunQueryUnitOfWork,
        telemetry_uow: TelemetryUnitOfWork,
    ) -> Mediator:
        mediator = Mediator()

        # commands
        mediator.register_command(GenerateDataCommand, [GenerateDataCommandHandler(mediator=mediator, uow=run_uow)])
        mediator.register_command(TrainCommand, [TrainCommandHandler(mediator=mediator, uow=run_uow)])
        mediator.register_command(EvaluateCommand, [EvaluateCommandHandler(mediator=mediator, uow=run_uow)])
        mediator.register_command(ReportCommand, [ReportCommandHandler(mediator=mediator, uow=run_uow)])
        mediator.register_command(RunOraclesCommand, [RunOraclesCommandHandler(mediator=mediator, uow=run_uow)])

        # query
        mediator.register_query(GetRunManifestQuery, GetRunManifestQueryHandler(uow=run_query_uow))
        mediator.register_query(GetRunTableQuery, GetRunTableQueryHandler(uow=run_query_uow))

        # events
        mediator.register_event(EpochCompletedEvent, [EpochCompletedEventHandler(uow=telemetry_uow)])
        mediator.register_event(BatchSkippedEvent, [BatchSkippedEventHandler(uow=telemetry_uow)])
        mediator.register_event(TrainingFinishedEvent, [TrainingFinishedEventHandler(uow=telemetry_uow)])
        return mediator
