from src.domain.runs.entities import RunManifest
from src.domain.runs.exceptions import RunAlreadyExistsException
from src.infrastructure.storage.converters import convert_json_to_dict, convert_to_json
from src.infrastructure.storage.repositories.base import FileRepository

MANIFEST_NAME = "manifest.json"


class ManifestRepository(FileRepository):
    def find_one_or_none(self) -> RunManifest | None:
        if not self.exists(MANIFEST_NAME):
            return None
        return RunManifest.from_dict(convert_json_to_dict(self.read_bytes(MANIFEST_NAME)))

    def add(self, manifest: RunManifest) -> RunManifest:
        if self.exists(MANIFEST_NAME):
            raise RunAlreadyExistsException(path=str(self.root))
        self.write_bytes(MANIFEST_NAME, convert_to_json(manifest.to_dict()))
        return manifest

    def update(self, manifest: RunManifest) -> RunManifest:
        self.write_bytes(MANIFEST_NAME, convert_to_json(manifest.to_dict()))
        return manifest
