from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from src.domain.base.values import BaseCompositeValueObject
from src.domain.condition.exceptions import ConditionConfigException, InvalidLabelException, PartitionException
from src.domain.diffcore.tape import ParameterRegistry
from src.domain.diffcore.tensor import Tensor
from src.domain.flow.values import FlowPass, FlowStack

ModelKind = Literal["density", "infocnf", "ccnf"]
DROPOUT_RATE = 0.5


@dataclass(frozen=True)
class LatentPartition(BaseCompositeValueObject):
    """z = [z_y, z_u]: supervised blocks occupy [0, d_y) in order, the rest is unsupervised."""

    d_total: int
    factor_widths: tuple[int, ...]

    def validate(self):
        if not self.factor_widths or any(width < 1 for width in self.factor_widths) or self.d_y > self.d_total:
            raise PartitionException(d_total=self.d_total, factor_widths=self.factor_widths)

    @classmethod
    def halves(cls, d_total: int) -> LatentPartition:
        return cls(d_total=d_total, factor_widths=(max(1, d_total // 2),))

    @classmethod
    def full(cls, d_total: int) -> LatentPartition:
        return cls(d_total=d_total, factor_widths=(d_total,))

    @property
    def d_y(self) -> int:
        return sum(self.factor_widths)

    @property
    def d_u(self) -> int:
        return self.d_total - self.d_y

    @property
    def blocks(self) -> list[slice]:
        offsets = np.cumsum((0, *self.factor_widths))
        return [slice(int(start), int(stop)) for start, stop in zip(offsets[:-1], offsets[1:])]

    @property
    def unsupervised(self) -> slice:
        return slice(self.d_y, self.d_total)


@dataclass(frozen=True)
class ConditionalPrior(BaseCompositeValueObject):
    """Per label factor, a linear map from the one-hot label to (mu, log sigma) of its block."""

    partition: LatentPartition
    class_counts: tuple[int, ...]
    prefix: str = "prior"

    def validate(self):
        if len(self.class_counts) != len(self.partition.factor_widths) or any(c < 2 for c in self.class_counts):
            raise ConditionConfigException(field="class_counts", value=self.class_counts)

    @classmethod
    def create(
        cls, registry: ParameterRegistry, partition: LatentPartition, class_counts: tuple[int, ...], prefix: str = "prior"
    ) -> ConditionalPrior:
        prior = cls(partition=partition, class_counts=tuple(class_counts), prefix=prefix)
        for factor, (width, classes) in enumerate(zip(partition.factor_widths, prior.class_counts)):
            registry.register(f"{prefix}.{factor}.w", np.zeros((classes, 2 * width)))
            registry.register(f"{prefix}.{factor}.b", np.zeros(2 * width))
        return prior


@dataclass(frozen=True)
class Classifier(BaseCompositeValueObject):
    """Per label factor, a linear map from that factor's supervised block to class logits."""

    partition: LatentPartition
    class_counts: tuple[int, ...]
    dropout: float = DROPOUT_RATE
    prefix: str = "classifier"

    def validate(self):
        if not 0.0 <= self.dropout < 1.0:
            raise ConditionConfigException(field="dropout", value=self.dropout)

    @classmethod
    def create(
        cls,
        registry: ParameterRegistry,
        partition: LatentPartition,
        class_counts: tuple[int, ...],
        dropout: float = DROPOUT_RATE,
        prefix: str = "classifier",
    ) -> Classifier:
        classifier = cls(partition=partition, class_counts=tuple(class_counts), dropout=dropout, prefix=prefix)
        for factor, (width, classes) in enumerate(zip(partition.factor_widths, classifier.class_counts)):
            registry.register(f"{prefix}.{factor}.w", np.zeros((width, classes)))
            registry.register(f"{prefix}.{factor}.b", np.zeros(classes))
        return classifier


@dataclass(frozen=True)
class ConditionalFlowModel:
    """A flow stack plus, for conditional kinds, the partition, prior and classifier around it."""

    kind: ModelKind
    stack: FlowStack
    partition: LatentPartition | None = None
    prior: ConditionalPrior | None = None
    classifier: Classifier | None = None

    @property
    def is_conditional(self) -> bool:
        return self.kind != "density"

    @property
    def class_counts(self) -> tuple[int, ...]:
        return self.prior.class_counts if self.prior else ()

    def conditioning_parameter_count(self, registry: ParameterRegistry) -> int:
        if not self.is_conditional:
            return 0
        return registry.count(f"{self.prior.prefix}.") + registry.count(f"{self.classifier.prefix}.")

    def check_labels(self, labels: np.ndarray) -> np.ndarray:
        labels = np.asarray(labels)
        if labels.ndim == 1:
            labels = labels[:, None]
        if labels.ndim != 2 or labels.shape[1] != len(self.class_counts):
            raise InvalidLabelException(label=labels.shape, classes=len(self.class_counts))
        for factor, classes in enumerate(self.class_counts):
            column = labels[:, factor]
            if not np.all(np.equal(np.mod(column, 1), 0)) or column.min() < 0 or column.max() >= classes:
                bad = column[(column < 0) | (column >= classes) | (np.mod(column, 1) != 0)][0]
                raise InvalidLabelException(label=bad.item(), classes=classes)
        return labels.astype(np.int64)


@dataclass(frozen=True)
class LossBreakdown:
    total: Tensor
    nll: Tensor
    xent: Tensor
    flow: FlowPass
    logits: tuple[np.ndarray, ...] = ()

    @property
    def nll_value(self) -> float:
        return self.nll.item()

    @property
    def xent_value(self) -> float:
        return self.xent.item()
