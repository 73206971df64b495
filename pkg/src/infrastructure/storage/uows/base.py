from __future__ import annotations

import abc

from pathlib import Path
from typing_extensions import Self


class AbstractUnitOfWork(abc.ABC):
    async def __aenter__(self) -> Self:
        return self

    async def __aexit__(self, *args, **kwargs) -> None:
        await self.rollback()

    @abc.abstractmethod
    async def commit(self) -> None:
        raise NotImplementedError

    @abc.abstractmethod
    async def rollback(self) -> None:
        raise NotImplementedError


class FileSystemAbstractUnitOfWork(AbstractUnitOfWork):
    """Files created inside the unit are removed again unless it commits.

    Appends to files that existed before the unit started are not undone.
    """

    def __init__(self, output_root: Path) -> None:
        super().__init__()
        self.output_root = Path(output_root)
        self.root: Path = self.output_root
        self._journal: list[Path] = []

    def at(self, run_dir: str | Path) -> Self:
        run_dir = Path(run_dir)
        self.root = run_dir if run_dir.is_absolute() else self.output_root / run_dir
        return self

    async def __aenter__(self) -> Self:
        self._journal = []
        return await super().__aenter__()

    async def commit(self) -> None:
        self._journal.clear()

    async def rollback(self) -> None:
        for path in reversed(self._journal):
            path.unlink(missing_ok=True)
        self._journal.clear()
