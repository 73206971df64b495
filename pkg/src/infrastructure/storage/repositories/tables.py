import csv
import io
import math

from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from src.infrastructure.storage.exceptions import ArtifactReadException, ArtifactWriteException
from src.infrastructure.storage.repositories.base import FileRepository


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(float(value))
    return str(value)


def _parse(value: str):
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


class TableRepository(FileRepository):
    """Header-first CSV tables; floats are written with full round-trip precision."""

    def write(self, name: str, columns: Sequence[str], rows: Iterable[dict]) -> Path:
        return self.write_bytes(name, self._render(columns, rows, header=True))

    def append(self, name: str, columns: Sequence[str], rows: Iterable[dict]) -> Path:
        path = self.path(name)
        body = self._render(columns, rows, header=not path.exists())
        self._track(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("ab") as stream:
                stream.write(body)
        except OSError as err:
            raise ArtifactWriteException(path=str(path), detail=str(err))
        return path

    def write_array(self, name: str, columns: Sequence[str], values: np.ndarray) -> Path:
        """Fast path for large numeric tables."""
        buffer = io.StringIO()
        np.savetxt(buffer, np.asarray(values), delimiter=",", fmt="%.17g", header=",".join(columns), comments="")
        return self.write_bytes(name, buffer.getvalue().encode("utf-8"))

    def read(self, name: str | Path) -> list[dict]:
        text = self.read_bytes(name).decode("utf-8")
        try:
            reader = csv.DictReader(io.StringIO(text))
            return [{key: _parse(value) for key, value in row.items()} for row in reader]
        except csv.Error as err:
            raise ArtifactReadException(path=str(self.path(name)), detail=str(err))

    def columns(self, name: str | Path) -> list[str]:
        text = self.read_bytes(name).decode("utf-8")
        return next(csv.reader(io.StringIO(text)), [])

    @staticmethod
    def _render(columns: Sequence[str], rows: Iterable[dict], header: bool) -> bytes:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        if header:
            writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(column)) for column in columns])
        return buffer.getvalue().encode("utf-8")
