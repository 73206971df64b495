from pathlib import Path
from typing import Any

from src.domain.train.values import Checkpoint
from src.infrastructure.storage.converters import (
    convert_blob_to_flat,
    convert_checkpoint_to_manifest,
    convert_flat_to_blob,
    convert_json_to_dict,
    convert_manifest_to_checkpoint,
    convert_to_json,
)
from src.infrastructure.storage.exceptions import ArtifactReadException
from src.infrastructure.storage.repositories.base import FileRepository

CHECKPOINT_NAME = "checkpoint"


class CheckpointRepository(FileRepository):
    """A JSON manifest next to a little-endian float64 blob of the flat parameter vector."""

    def add(self, checkpoint: Checkpoint, name: str = CHECKPOINT_NAME) -> Path:
        blob_name = f"{name}.bin"
        self.write_bytes(blob_name, convert_flat_to_blob(checkpoint.flat))
        return self.write_bytes(f"{name}.json", convert_to_json(convert_checkpoint_to_manifest(checkpoint, blob_name)))

    def read_manifest(self, path: str | Path) -> dict[str, Any]:
        try:
            manifest = convert_json_to_dict(self.read_bytes(path))
        except ValueError as err:
            raise ArtifactReadException(path=str(self.path(path)), detail=str(err))
        if "format_version" not in manifest:
            raise ArtifactReadException(path=str(self.path(path)), detail="not a checkpoint manifest")
        return manifest

    def load(self, path: str | Path) -> Checkpoint:
        manifest_path = self.path(path)
        manifest = self.read_manifest(manifest_path)
        flat = convert_blob_to_flat(self.read_bytes(manifest_path.parent / manifest["blob"]))
        if flat.size != manifest["size"]:
            raise ArtifactReadException(
                path=str(manifest_path), detail=f"blob holds {flat.size} values, manifest expects {manifest['size']}"
            )
        return convert_manifest_to_checkpoint(manifest, flat)
