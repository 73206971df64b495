from pathlib import Path
from typing import Any

from src.infrastructure.storage.converters import convert_json_to_dict, convert_to_json
from src.infrastructure.storage.repositories.base import FileRepository


class ReportRepository(FileRepository):
    def write(self, name: str, report: Any) -> Path:
        return self.write_bytes(name, convert_to_json(report))

    def read(self, name: str | Path) -> dict[str, Any]:
        return convert_json_to_dict(self.read_bytes(name))
