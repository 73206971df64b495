from typing_extensions import Self

from src.infrastructure.storage.repositories.checkpoints import CheckpointRepository
from src.infrastructure.storage.repositories.manifests import ManifestRepository
from src.infrastructure.storage.repositories.reports import ReportRepository
from src.infrastructure.storage.repositories.tables import TableRepository
from src.infrastructure.storage.uows.base import FileSystemAbstractUnitOfWork


class RunUnitOfWork(FileSystemAbstractUnitOfWork):
    async def __aenter__(self) -> Self:
        uow = await super().__aenter__()
        self.manifests = ManifestRepository(root=self.root, journal=self._journal)
        self.checkpoints = CheckpointRepository(root=self.root, journal=self._journal)
        self.tables = TableRepository(root=self.root, journal=self._journal)
        self.reports = ReportRepository(root=self.root, journal=self._journal)
        return uow


class RunQueryUnitOfWork(RunUnitOfWork):
    """Separate instance for the read side, so a query never rebinds a command's run directory."""


class TelemetryUnitOfWork(RunUnitOfWork):
    """Used by event handlers that append per-epoch tables while a command is still running."""
