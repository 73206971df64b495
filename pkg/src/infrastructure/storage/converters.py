from typing import Any

import numpy as np
import orjson

from src.domain.train.values import Checkpoint

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS

BLOB_DTYPE = np.dtype("<f8")


def convert_to_json(data: Any) -> bytes:
    return orjson.dumps(data, option=JSON_OPTIONS)


def convert_json_to_dict(body: bytes) -> dict[str, Any]:
    return orjson.loads(body)


def convert_checkpoint_to_manifest(checkpoint: Checkpoint, blob_name: str) -> dict[str, Any]:
    return {
        "format_version": checkpoint.format_version,
        "task": checkpoint.task,
        "architecture": checkpoint.architecture,
        "config": checkpoint.config,
        "parameters": checkpoint.parameters,
        "blob": blob_name,
        "size": int(checkpoint.flat.size),
    }


def convert_flat_to_blob(flat: np.ndarray) -> bytes:
    return np.ascontiguousarray(flat, dtype=BLOB_DTYPE).tobytes()


def convert_blob_to_flat(blob: bytes) -> np.ndarray:
    return np.frombuffer(blob, dtype=BLOB_DTYPE).astype(np.float64)


def convert_manifest_to_checkpoint(manifest: dict[str, Any], flat: np.ndarray) -> Checkpoint:
    return Checkpoint(
        task=manifest["task"],
        config=manifest["config"],
        parameters=manifest["parameters"],
        flat=flat,
        architecture=manifest.get("architecture", {}),
        format_version=int(manifest["format_version"]),
    )
