import numpy as np
import pytest

from src.domain.diffcore.tape import ParameterRegistry
from src.domain.synthdata.seeds import SeedStream
from src.infrastructure.storage.uows.run_uow import RunUnitOfWork
from src.logic.mediator.base import Mediator
from src.presentation.cli.dependencies import setup_container
from src.presentation.cli.settings import Settings


@pytest.fixture
def stream() -> SeedStream:
    return SeedStream(1234)


@pytest.fixture
def rng() -> np.random.Generator:
    return SeedStream(1234).generator("tests")


@pytest.fixture
def registry() -> ParameterRegistry:
    return ParameterRegistry()


@pytest.fixture
def settings(tmp_path) -> Settings:
    return Settings(OUTPUT_ROOT=tmp_path, LOG_DIR=tmp_path / "logs")


@pytest.fixture
def run_uow(tmp_path) -> RunUnitOfWork:
    return RunUnitOfWork(output_root=tmp_path)


@pytest.fixture
async def mediator(settings):
    container = setup_container(settings)
    yield await container.get(Mediator)
    await container.close()


def tiny_config(task: str = "density", **overrides) -> dict:
    """Smallest configs that still exercise every stage of a run."""
    base = {
        "density": {
            "task": "density",
            "epochs": 2,
            "batch_size": 32,
            "eval_batch_size": 64,
            "model": {"hidden": [8, 8]},
            "tolerance": {"value": 1e-3, "eval_value": 1e-5},
            "data": {"n_train": 64, "n_test": 64},
        },
        "infocnf": {
            "task": "infocnf",
            "epochs": 2,
            "batch_size": 32,
            "model": {"hidden": [8, 8], "gate_hidden": 4},
            "tolerance": {"value": 1e-3},
            "data": {"n_test": 40, "labeled": {"samples_per_class": 16}},
        },
        "latentode": {
            "task": "latentode",
            "epochs": 2,
            "batch_size": 4,
            "model": {"latent_units": 4, "encoder_hidden": 6},
            "tolerance": {"value": 1e-3, "eval_value": 1e-3},
            "data": {
                "spirals": {"n_curves": 8, "curve_length": 60, "window": 6, "horizon": 4},
                "test_curves": 4,
            },
        },
    }
    key = "infocnf" if task == "ccnf" else task
    config = {**base[key], "task": task}
    config.update(overrides)
    return config
