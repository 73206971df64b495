from __future__ import annotations

import math

from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np

from src.domain.base.values import BaseCompositeValueObject
from src.domain.flow.values import EXACT_TRACE_MAX_DIM, TraceMode
from src.domain.odesolve.values import GATE_TOLERANCE_MAX, GATE_TOLERANCE_MIN
from src.domain.synthdata.values import Labeled2dSpec, MixtureSpec, SpiralCorpusSpec
from src.domain.train.exceptions import ScheduleException, TrainConfigException

Task = Literal["density", "infocnf", "ccnf", "latentode"]
Dataset = Literal["mix1d", "labeled2d", "spirals"]
ToleranceMode = Literal["fixed", "gated"]
EvaluationMode = Literal["fixed", "learned"]

TASKS: tuple[Task, ...] = ("density", "infocnf", "ccnf", "latentode")
DEFAULT_DATASETS: dict[str, Dataset] = {
    "density": "mix1d",
    "infocnf": "labeled2d",
    "ccnf": "labeled2d",
    "latentode": "spirals",
}
EVAL_TOLERANCE = 1e-5
MAX_SKIP_FRACTION = 0.05

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class OptimizerConfig(BaseCompositeValueObject):
    """Adam with a milestone schedule: each (epoch, lr) pair applies from that 1-based epoch on."""

    lr: float = 1e-3
    schedule: tuple[tuple[int, float], ...] = ()

    def validate(self):
        if not math.isfinite(self.lr) or self.lr <= 0:
            raise ScheduleException(schedule=(self.lr, self.schedule))
        previous_epoch, previous_lr = 0, self.lr
        for epoch, lr in self.schedule:
            if epoch <= previous_epoch or lr <= 0 or lr > previous_lr:
                raise ScheduleException(schedule=(self.lr, self.schedule))
            previous_epoch, previous_lr = epoch, lr

    def lr_at(self, epoch: int) -> float:
        current = self.lr
        for start, lr in self.schedule:
            if epoch >= start:
                current = lr
        return current


@dataclass(frozen=True)
class ModelConfig(BaseCompositeValueObject):
    num_layers: int = 1
    hidden: tuple[int, ...] = (32, 32)
    activation: Literal["softplus", "tanh"] = "softplus"
    trace_mode: TraceMode = "exact"
    init_scale: float = 0.5
    dropout: float = 0.5
    gate_hidden: int = 16
    max_steps: int = 10000
    latent_units: int = 20
    encoder_hidden: int = 25
    partitioned: bool = True

    def validate(self):
        if self.num_layers < 1:
            raise TrainConfigException(field="model.num_layers", value=self.num_layers)
        if not self.hidden or any(width < 1 for width in self.hidden):
            raise TrainConfigException(field="model.hidden", value=self.hidden)
        if not 0.0 <= self.dropout < 1.0:
            raise TrainConfigException(field="model.dropout", value=self.dropout)
        if self.gate_hidden < 1 or self.max_steps < 1:
            raise TrainConfigException(field="model.gate_hidden/max_steps", value=(self.gate_hidden, self.max_steps))


@dataclass(frozen=True)
class ToleranceConfig(BaseCompositeValueObject):
    """Training tolerance: one fixed value, or gated per layer and batch; evaluation defaults to 1e-5."""

    mode: ToleranceMode = "fixed"
    value: float = 1e-5
    eval_value: float = EVAL_TOLERANCE
    alpha: float | None = None
    baseline: bool = True
    baseline_decay: float = 0.99

    def validate(self):
        if self.mode not in ("fixed", "gated"):
            raise TrainConfigException(field="tolerance.mode", value=self.mode)
        for name in ("value", "eval_value"):
            tolerance = getattr(self, name)
            if not GATE_TOLERANCE_MIN <= tolerance <= GATE_TOLERANCE_MAX:
                raise TrainConfigException(field=f"tolerance.{name}", value=tolerance)
        if self.alpha is not None and (not math.isfinite(self.alpha) or self.alpha < 0):
            raise TrainConfigException(field="tolerance.alpha", value=self.alpha)
        if not 0.0 <= self.baseline_decay < 1.0:
            raise TrainConfigException(field="tolerance.baseline_decay", value=self.baseline_decay)


@dataclass(frozen=True)
class DataConfig(BaseCompositeValueObject):
    dataset: Dataset | None = None
    n_train: int = 2000
    n_test: int = 1000
    mixture: MixtureSpec = field(default_factory=MixtureSpec)
    labeled: Labeled2dSpec = field(default_factory=Labeled2dSpec)
    spirals: SpiralCorpusSpec = field(default_factory=lambda: SpiralCorpusSpec(n_curves=500))
    test_curves: int = 200

    def validate(self):
        if self.dataset is not None and self.dataset not in ("mix1d", "labeled2d", "spirals"):
            raise TrainConfigException(field="data.dataset", value=self.dataset)
        if self.n_train < 1 or self.n_test < 1 or self.test_curves < 2 or self.test_curves % 2:
            raise TrainConfigException(field="data sizes", value=(self.n_train, self.n_test, self.test_curves))


@dataclass(frozen=True)
class TrainConfig(BaseCompositeValueObject):
    task: Task
    seed: int = 0
    epochs: int = 200
    batch_size: int = 256
    eval_batch_size: int = 1000
    beta: float = 1.0
    beta_sup: float = 1.0
    max_skip_fraction: float = MAX_SKIP_FRACTION
    early_stop_patience: int | None = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    tolerance: ToleranceConfig = field(default_factory=ToleranceConfig)
    data: DataConfig = field(default_factory=DataConfig)

    def validate(self):
        if self.task not in TASKS:
            raise TrainConfigException(field="task", value=self.task)
        if self.epochs < 1 or self.batch_size < 1 or self.eval_batch_size < 1:
            raise TrainConfigException(field="epochs/batch_size", value=(self.epochs, self.batch_size))
        if self.beta < 0 or self.beta_sup < 0:
            raise TrainConfigException(field="beta", value=(self.beta, self.beta_sup))
        if not 0.0 <= self.max_skip_fraction <= 1.0:
            raise TrainConfigException(field="max_skip_fraction", value=self.max_skip_fraction)
        if (self.task == "latentode") != (self.dataset == "spirals"):
            raise TrainConfigException(field="data.dataset", value=f"{self.dataset} for task {self.task}")
        if self.task in ("infocnf", "ccnf") and self.dataset != "labeled2d":
            raise TrainConfigException(field="data.dataset", value=f"{self.dataset} has no labels")
        if self.task == "latentode" and self.tolerance.mode == "gated":
            raise TrainConfigException(field="tolerance.mode", value="gated (flow tasks only)")
        if self.model.trace_mode == "exact" and self.task != "latentode" and self.dim > EXACT_TRACE_MAX_DIM:
            raise TrainConfigException(field="model.trace_mode", value=self.model.trace_mode)

    @property
    def dataset(self) -> Dataset:
        return self.data.dataset or DEFAULT_DATASETS[self.task]

    @property
    def dim(self) -> int:
        return {"mix1d": 1, "labeled2d": 2, "spirals": 2}[self.dataset]

    @property
    def is_gated(self) -> bool:
        return self.tolerance.mode == "gated"

    def lr_at(self, epoch: int) -> float:
        return self.optimizer.lr_at(epoch)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_nll: float
    test_nll: float
    test_err: float
    mean_nfe: float
    lr: float
    dim: int = 1
    test_marginal_nll: float = math.nan
    train_loss: float = math.nan
    test_mse: float = math.nan
    test_mse_conditioned: float = math.nan
    skipped_batches: int = 0
    wall_time: float = 0.0

    @property
    def test_bits_per_dim(self) -> float:
        return self.test_nll / (self.dim * math.log(2.0))

    def to_row(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_nll": self.train_nll,
            "test_nll": self.test_nll,
            "test_err": self.test_err,
            "mean_nfe": self.mean_nfe,
            "lr": self.lr,
            "test_bpd": self.test_bits_per_dim,
            "test_marginal_nll": self.test_marginal_nll,
            "train_loss": self.train_loss,
            "test_mse": self.test_mse,
            "test_mse_conditioned": self.test_mse_conditioned,
            "skipped_batches": self.skipped_batches,
        }


METRICS_COLUMNS = tuple(EpochMetrics(0, 0.0, 0.0, 0.0, 0.0, 0.0).to_row())


@dataclass(frozen=True)
class SolveRecord:
    epoch: int
    batch: int
    layer: int
    nfe: int
    accepted_steps: int
    rejected_steps: int
    tolerance: float

    def to_row(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GateRecord:
    epoch: int
    batch: int
    layer: int
    mu: float
    sigma: float
    log10_tolerance: float
    tolerance: float
    nfe: int

    def to_row(self) -> dict:
        return asdict(self)


SOLVES_COLUMNS = ("epoch", "batch", "layer", "nfe", "accepted_steps", "rejected_steps", "tolerance")
GATES_COLUMNS = ("epoch", "batch", "layer", "mu", "sigma", "log10_tolerance", "tolerance", "nfe")


@dataclass(frozen=True)
class EvaluationResult:
    mode: EvaluationMode
    tolerance: float | None
    batch_size: int
    nll: float
    err: float
    mean_nfe: float
    marginal_nll: float = math.nan
    dim: int = 1

    def to_row(self) -> dict:
        return {
            "mode": self.mode,
            "tolerance": self.tolerance if self.tolerance is not None else "learned",
            "batch_size": self.batch_size,
            "test_nll": self.nll,
            "test_bpd": self.nll / (self.dim * math.log(2.0)),
            "test_err": self.err,
            "mean_nfe": self.mean_nfe,
            "test_marginal_nll": self.marginal_nll,
        }


@dataclass(frozen=True)
class NormalizationResult:
    area: float
    lo: float
    hi: float
    step: float
    tolerance: float | None

    @property
    def error(self) -> float:
        return abs(self.area - 1.0)

    def to_dict(self) -> dict:
        return {**asdict(self), "error": self.error}


@dataclass(frozen=True, eq=False)
class FlowDataset:
    train_x: np.ndarray
    test_x: np.ndarray
    train_y: np.ndarray | None = None
    test_y: np.ndarray | None = None
    class_counts: tuple[int, ...] = ()

    @property
    def dim(self) -> int:
        return int(self.train_x.shape[-1])


@dataclass(frozen=True, eq=False)
class Checkpoint:
    """Everything needed to rebuild a trained model: config, registry layout and the flat parameters."""

    task: Task
    config: dict
    parameters: list[dict]
    flat: np.ndarray
    architecture: dict = field(default_factory=dict)
    format_version: int = 1
