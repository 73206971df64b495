from abc import ABC
from pathlib import Path

from src.infrastructure.storage.exceptions import ArtifactNotFoundException, ArtifactReadException, ArtifactWriteException


class BaseRepository(ABC): ...


class FileRepository(BaseRepository):
    """Files under one run directory; newly created paths go to the unit of work's journal."""

    def __init__(self, root: Path, journal: list[Path]):
        self.root = root
        self.journal = journal

    def path(self, name: str | Path) -> Path:
        name = Path(name)
        return name if name.is_absolute() else self.root / name

    def exists(self, name: str | Path) -> bool:
        return self.path(name).exists()

    def read_bytes(self, name: str | Path) -> bytes:
        path = self.path(name)
        if not path.is_file():
            raise ArtifactNotFoundException(path=str(path))
        try:
            return path.read_bytes()
        except OSError as err:
            raise ArtifactReadException(path=str(path), detail=str(err))

    def write_bytes(self, name: str | Path, body: bytes) -> Path:
        path = self.path(name)
        self._track(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(body)
        except OSError as err:
            raise ArtifactWriteException(path=str(path), detail=str(err))
        return path

    def _track(self, path: Path) -> None:
        if not path.exists() and path not in self.journal:
            self.journal.append(path)
