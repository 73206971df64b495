"""JSON training config as read from ``--config``; every level rejects unknown keys.

The schema checks shape and types. Ranges and cross-field rules are enforced by the
domain value objects the validated dict is mapped into.
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class StrictSchema(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MixtureSchema(StrictSchema):
    weights: list[float] | None = None
    means: list[float] | None = None
    stds: list[float] | None = None


class LabeledSchema(StrictSchema):
    means: list[tuple[float, float]] | None = None
    stds: list[tuple[float, float]] | None = None
    samples_per_class: int | None = Field(default=None, gt=0)


class SpiralsSchema(StrictSchema):
    n_curves: int | None = Field(default=None, gt=0)
    curve_length: int | None = Field(default=None, gt=0)
    window: int | None = Field(default=None, gt=0)
    horizon: int | None = Field(default=None, ge=0)
    t_start: float | None = None
    t_stop: float | None = None
    noise: float | None = Field(default=None, ge=0)
    a_mean: float | None = None
    a_std: float | None = Field(default=None, ge=0)
    b_mean: float | None = None
    b_std: float | None = Field(default=None, ge=0)


class DataSchema(StrictSchema):
    dataset: Literal["mix1d", "labeled2d", "spirals"] | None = None
    n_train: int | None = Field(default=None, gt=0)
    n_test: int | None = Field(default=None, gt=0)
    mixture: MixtureSchema | None = None
    labeled: LabeledSchema | None = None
    spirals: SpiralsSchema | None = None
    test_curves: int | None = Field(default=None, gt=0)


class OptimizerSchema(StrictSchema):
    lr: float | None = Field(default=None, gt=0)
    schedule: list[tuple[int, float]] | None = None


class ModelSchema(StrictSchema):
    num_layers: int | None = Field(default=None, gt=0)
    hidden: list[int] | None = None
    activation: Literal["softplus", "tanh"] | None = None
    trace_mode: Literal["exact", "hutchinson"] | None = None
    init_scale: float | None = Field(default=None, gt=0)
    dropout: float | None = Field(default=None, ge=0, lt=1)
    gate_hidden: int | None = Field(default=None, gt=0)
    max_steps: int | None = Field(default=None, gt=0)
    latent_units: int | None = Field(default=None, gt=0)
    encoder_hidden: int | None = Field(default=None, gt=0)
    partitioned: bool | None = None


class ToleranceSchema(StrictSchema):
    mode: Literal["fixed", "gated"] | None = None
    value: float | None = Field(default=None, gt=0)
    eval_value: float | None = Field(default=None, gt=0)
    alpha: float | None = Field(default=None, ge=0)
    baseline: bool | None = None
    baseline_decay: float | None = Field(default=None, ge=0, lt=1)


class TrainConfigSchema(StrictSchema):
    task: Literal["density", "infocnf", "ccnf", "latentode"]
    seed: int = 0
    epochs: int | None = Field(default=None, gt=0)
    batch_size: int | None = Field(default=None, gt=0)
    eval_batch_size: int | None = Field(default=None, gt=0)
    beta: float | None = Field(default=None, ge=0)
    beta_sup: float | None = Field(default=None, ge=0)
    max_skip_fraction: float | None = Field(default=None, ge=0, le=1)
    early_stop_patience: int | None = Field(default=None, gt=0)
    optimizer: OptimizerSchema | None = None
    model: ModelSchema | None = None
    tolerance: ToleranceSchema | None = None
    data: DataSchema | None = None

    def to_config(self) -> dict:
        """Only what the file set; the domain fills in its own defaults."""
        return self.model_dump(exclude_none=True)
