from dishka import Provider, Scope, from_context, provide

from src.infrastructure.storage.uows.run_uow import RunQueryUnitOfWork, RunUnitOfWork, TelemetryUnitOfWork
from src.presentation.cli.settings import Settings


class StorageProvider(Provider):
    scope = Scope.APP
    settings = from_context(provides=Settings, scope=Scope.APP)

    @provide(scope=Scope.APP)
    def run_uow(self, settings: Settings) -> RunUnitOfWork:
        return RunUnitOfWork(output_root=settings.OUTPUT_ROOT)

    @provide(scope=Scope.APP)
    def run_query_uow(self, settings: Settings) -> RunQueryUnitOfWork:
        return RunQueryUnitOfWork(output_root=settings.OUTPUT_ROOT)

    @provide(scope=Scope.APP)
    def telemetry_uow(self, settings: Settings) -> TelemetryUnitOfWork:
        return TelemetryUnitOfWork(output_root=settings.OUTPUT_ROOT)
