from typing import Any

from src.domain.synthdata.values import Labeled2dSpec, MixtureSpec, SpiralCorpusSpec
from src.domain.train.exceptions import TrainConfigException
from src.domain.train.values import DataConfig, ModelConfig, OptimizerConfig, ToleranceConfig, TrainConfig

SPEC_SECTIONS = {"mixture": MixtureSpec, "labeled": Labeled2dSpec, "spirals": SpiralCorpusSpec}


def _tuples(value):
    if isinstance(value, (list, tuple)):
        return tuple(_tuples(item) for item in value)
    return value


def _build(cls, section: str, data: dict[str, Any] | None):
    """Sequences become tuples so the frozen value objects stay hashable and comparable."""
    values = {key: _tuples(value) for key, value in (data or {}).items()}
    try:
        return cls(**values)
    except TypeError as err:
        raise TrainConfigException(field=section, value=str(err))


def data_config_mapper(data: dict[str, Any] | None) -> DataConfig:
    data = dict(data or {})
    specs = {
        name: _build(cls, f"data.{name}", data.pop(name))
        for name, cls in SPEC_SECTIONS.items()
        if data.get(name) is not None
    }
    data = {key: value for key, value in data.items() if key not in SPEC_SECTIONS}
    try:
        return DataConfig(**data, **specs)
    except TypeError as err:
        raise TrainConfigException(field="data", value=str(err))


def train_config_mapper(data: dict[str, Any]) -> TrainConfig:
    """Nested plain dict, as validated by the config schema or stored in a checkpoint, to a TrainConfig."""
    data = dict(data)
    sections = {
        "optimizer": _build(OptimizerConfig, "optimizer", data.pop("optimizer", None)),
        "model": _build(ModelConfig, "model", data.pop("model", None)),
        "tolerance": _build(ToleranceConfig, "tolerance", data.pop("tolerance", None)),
        "data": data_config_mapper(data.pop("data", None)),
    }
    try:
        return TrainConfig(**data, **sections)
    except TypeError as err:
        raise TrainConfigException(field="config", value=str(err))
