from dishka import AsyncContainer, make_async_container

from src.infrastructure.logger_adapter.logger import configure_logging
from src.infrastructure.storage.provider import StorageProvider
from src.logic.provider import LogicProvider
from src.presentation.cli.settings import Settings, settings


def setup_container(app_settings: Settings | None = None) -> AsyncContainer:
    app_settings = app_settings or settings
    configure_logging(app_settings.LOG_LEVEL, app_settings.LOG_DIR)
    return make_async_container(
        StorageProvider(),
        LogicProvider(),
        context={Settings: app_settings},
    )
