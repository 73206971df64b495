from __future__ import annotations

import numpy as np

from src.domain.diffcore.tape import ParameterRegistry
from src.domain.synthdata.seeds import SeedStream
from src.domain.synthdata.values import MixtureSpec
from src.domain.train.datasets import flow_dataset
from src.domain.train.entities import AdamState
from src.domain.train.models import build_flow
from src.domain.train.service import (
    FlowTrainer,
    adam_step,
    evaluate,
    restore_flow,
    riemann_normalization,
)
from src.domain.train.values import Checkpoint, DataConfig, ModelConfig, TrainConfig
from src.infrastructure.storage.converters import (
    convert_blob_to_flat,
    convert_checkpoint_to_manifest,
    convert_flat_to_blob,
    convert_json_to_dict,
    convert_manifest_to_checkpoint,
    convert_to_json,
)
from src.logic.dto.mappers.config_mappers import train_config_mapper
from src.logic.oracles.registry import OracleOutcome, oracle


def tiny_density_config(seed: int = 0, epochs: int = 2) -> TrainConfig:
    return TrainConfig(
        task="density",
        seed=seed,
        epochs=epochs,
        batch_size=32,
        model=ModelConfig(hidden=(8, 8)),
        data=DataConfig(n_train=64, n_test=64, mixture=MixtureSpec()),
    )


def _quadratic_descent(steps: int, lr: float = 0.1) -> np.ndarray:
    theta = np.array([1.0])
    state = AdamState.zeros(1)
    for _ in range(steps):
        theta = adam_step(theta, 2.0 * theta, state, lr)
    return theta


@oracle("train.adam_first_step")
def adam_first_step() -> OracleOutcome:
    theta = float(_quadratic_descent(1)[0])
    return OracleOutcome(measured=theta, expected=0.9, tolerance=1e-6, passed=abs(theta - 0.9) <= 1e-6)


@oracle("train.adam_convergence")
def adam_convergence() -> OracleOutcome:
    theta = float(abs(_quadratic_descent(200)[0]))
    return OracleOutcome(measured=theta, expected=0.0, tolerance=1e-3, passed=theta < 1e-3)


@oracle("train.flow_normalization", criterion="normalization")
def flow_normalization() -> OracleOutcome:
    """Change of variables keeps an untrained 1D flow normalized."""
    config = tiny_density_config()
    registry = ParameterRegistry()
    bundle = build_flow(config, registry, SeedStream(config.seed).generator("init"))
    result = riemann_normalization(bundle, registry)
    return OracleOutcome(measured=result.area, expected=1.0, tolerance=1e-3, passed=result.error <= 1e-3)


def _row_key(rows: list[dict]) -> list[tuple]:
    return [tuple(repr(value) for value in row.values()) for row in rows]


@oracle("train.determinism_round_trip", criterion="determinism-round-trip")
def determinism_round_trip() -> OracleOutcome:
    """Two runs under one seed agree bit for bit; a checkpoint written and read back evaluates identically."""
    config = tiny_density_config()
    data = flow_dataset(config)
    runs = []
    for _ in range(2):
        trainer = FlowTrainer.create(config, data)
        trainer.run()
        runs.append(trainer)
    identical = _row_key([item.to_row() for item in runs[0].session.history]) == _row_key(
        [item.to_row() for item in runs[1].session.history]
    )
    checkpoint = runs[0].checkpoint()
    manifest = convert_json_to_dict(convert_to_json(convert_checkpoint_to_manifest(checkpoint, "checkpoint.bin")))
    restored: Checkpoint = convert_manifest_to_checkpoint(manifest, convert_blob_to_flat(convert_flat_to_blob(checkpoint.flat)))
    bundle, registry = restore_flow(train_config_mapper(restored.config), restored)
    before = runs[0].evaluate()
    after = evaluate(bundle, registry, data.test_x, tolerance=config.tolerance.eval_value, batch_size=config.eval_batch_size)
    matches = _row_key([before.to_row()]) == _row_key([after.to_row()])
    return OracleOutcome(
        measured=abs(before.nll - after.nll),
        expected=0.0,
        tolerance="bitwise",
        passed=identical and matches,
        detail=f"reruns identical: {identical}, checkpoint metrics identical: {matches}",
    )
