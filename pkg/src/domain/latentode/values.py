from __future__ import annotations

import math

from collections.abc import Sequence
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from src.domain.base.values import BaseCompositeValueObject
from src.domain.condition.values import LatentPartition
from src.domain.diffcore.mlp import Mlp
from src.domain.diffcore.tape import ParameterRegistry
from src.domain.diffcore.tensor import Tensor
from src.domain.latentode.exceptions import SequenceShapeException
from src.domain.odesolve.values import SolveStats

Direction = Literal["clockwise", "counter_clockwise"]
DIRECTIONS: tuple[Direction, ...] = ("clockwise", "counter_clockwise")
SPACING_TOLERANCE = 1e-12

LATENT_WIDTH = 5
SUPERVISED_WIDTH = 3
ENCODER_HIDDEN = 25
NETWORK_HIDDEN = 20
OBSERVATION_WIDTH = 2
# [a, b, one-hot direction]
LABEL_FEATURES = 4


@dataclass(frozen=True)
class SpiralSystem(BaseCompositeValueObject):
    a: float
    b: float
    direction: Direction

    def validate(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise SequenceShapeException(detail=f"spiral parameters must be finite, got a={self.a}, b={self.b}")
        if self.direction not in DIRECTIONS:
            raise SequenceShapeException(detail=f"unknown direction {self.direction!r}")

    @property
    def direction_index(self) -> int:
        return DIRECTIONS.index(self.direction)

    def features(self) -> np.ndarray:
        encoded = np.zeros(LABEL_FEATURES)
        encoded[0], encoded[1] = self.a, self.b
        encoded[2 + self.direction_index] = 1.0
        return encoded


def _check_grid(times: np.ndarray) -> None:
    if times.ndim != 1 or times.size < 2:
        raise SequenceShapeException(detail="at least two observation times are required")
    steps = np.diff(times)
    if np.any(steps <= 0):
        raise SequenceShapeException(detail="times must be strictly increasing")
    if np.max(np.abs(steps - steps[0])) > SPACING_TOLERANCE * max(1.0, float(np.max(np.abs(times)))):
        raise SequenceShapeException(detail="times must be equally spaced")


@dataclass(frozen=True, eq=False)
class ObservationSequence(BaseCompositeValueObject):
    times: np.ndarray
    points: np.ndarray

    def validate(self):
        _check_grid(np.asarray(self.times))
        if np.shape(self.points) != (np.size(self.times), OBSERVATION_WIDTH):
            raise SequenceShapeException(
                detail=f"points of shape {np.shape(self.points)} do not match {np.size(self.times)} times"
            )

    def __len__(self) -> int:
        return int(np.size(self.times))

    @property
    def spacing(self) -> float:
        return float(self.times[1] - self.times[0])

    def prefix(self, length: int) -> ObservationSequence:
        return ObservationSequence(times=self.times[:length], points=self.points[:length])


@dataclass(frozen=True, eq=False)
class SpiralBatch(BaseCompositeValueObject):
    """Sequences sharing one relative time grid; every window starts at t=0."""

    times: np.ndarray
    points: np.ndarray
    systems: tuple[SpiralSystem, ...] = ()

    def validate(self):
        _check_grid(np.asarray(self.times))
        if self.points.ndim != 3 or self.points.shape[1:] != (self.times.size, OBSERVATION_WIDTH):
            raise SequenceShapeException(detail=f"batch points of shape {self.points.shape} do not match the grid")
        if self.systems and len(self.systems) != self.points.shape[0]:
            raise SequenceShapeException(detail="one spiral system per sequence is required")

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @classmethod
    def stack(cls, sequences: Sequence[ObservationSequence], systems: Sequence[SpiralSystem] = ()) -> SpiralBatch:
        if not sequences:
            raise SequenceShapeException(detail="empty batch")
        relative = [np.asarray(item.times) - item.times[0] for item in sequences]
        for grid in relative[1:]:
            if grid.shape != relative[0].shape or np.max(np.abs(grid - relative[0])) > 1e-9:
                raise SequenceShapeException(detail="sequences do not share one relative time grid")
        return cls(
            times=relative[0],
            points=np.stack([np.asarray(item.points, dtype=np.float64) for item in sequences]),
            systems=tuple(systems),
        )

    def label_features(self) -> np.ndarray:
        return np.stack([system.features() for system in self.systems])

    def direction_labels(self) -> np.ndarray:
        return np.array([system.direction_index for system in self.systems], dtype=np.int64)

    def prefix(self, length: int) -> SpiralBatch:
        return SpiralBatch(times=self.times[:length], points=self.points[:, :length], systems=self.systems)

    def take(self, indices: np.ndarray) -> SpiralBatch:
        return SpiralBatch(
            times=self.times,
            points=self.points[indices],
            systems=tuple(self.systems[int(index)] for index in indices) if self.systems else (),
        )


@dataclass(frozen=True)
class LatentOdeModel(BaseCompositeValueObject):
    """RNN encoder, latent dynamics and decoder; ``partitioned`` adds the conditional prior and q_theta."""

    partition: LatentPartition
    dynamics: Mlp
    decoder: Mlp
    partitioned: bool = True
    hidden: int = ENCODER_HIDDEN

    def validate(self):
        if self.dynamics.in_features != self.partition.d_total or self.dynamics.out_features != self.partition.d_total:
            raise SequenceShapeException(detail="latent dynamics must map the latent width to itself")
        if self.decoder.in_features != self.partition.d_total or self.decoder.out_features != OBSERVATION_WIDTH:
            raise SequenceShapeException(detail="decoder must map the latent width to 2D points")

    @property
    def latent_width(self) -> int:
        return self.partition.d_total

    @property
    def supervised_width(self) -> int:
        return self.partition.d_y

    def baseline(self) -> LatentOdeModel:
        return replace(self, partitioned=False)

    @classmethod
    def create(
        cls,
        registry: ParameterRegistry,
        rng: np.random.Generator,
        partitioned: bool = True,
        latent_width: int = LATENT_WIDTH,
        supervised_width: int = SUPERVISED_WIDTH,
        hidden: int = ENCODER_HIDDEN,
        units: int = NETWORK_HIDDEN,
        init_scale: float = 1.0,
    ) -> LatentOdeModel:
        partition = LatentPartition(d_total=latent_width, factor_widths=(supervised_width,))
        encoder_inputs = OBSERVATION_WIDTH + 1
        input_weight = rng.standard_normal((encoder_inputs, hidden)) * init_scale / np.sqrt(encoder_inputs)
        registry.register("encoder.wx", input_weight)
        registry.register("encoder.wh", rng.standard_normal((hidden, hidden)) * init_scale / np.sqrt(hidden))
        registry.register("encoder.b", np.zeros(hidden))
        registry.register("encoder.head.w", rng.standard_normal((hidden, 2 * latent_width)) * 0.1 / np.sqrt(hidden))
        registry.register("encoder.head.b", np.zeros(2 * latent_width))
        dynamics = Mlp.create(registry, "dynamics", (latent_width, units, latent_width), rng, activation="tanh")
        decoder = Mlp.create(registry, "decoder", (latent_width, units, OBSERVATION_WIDTH), rng, activation="tanh")
        if partitioned:
            registry.register("condition.w", np.zeros((LABEL_FEATURES, 2 * supervised_width)))
            registry.register("condition.b", np.zeros(2 * supervised_width))
            registry.register("supervise.w", np.zeros((supervised_width, 2 + len(DIRECTIONS))))
            registry.register("supervise.b", np.zeros(2 + len(DIRECTIONS)))
        return cls(partition=partition, dynamics=dynamics, decoder=decoder, partitioned=partitioned, hidden=hidden)


@dataclass(frozen=True)
class ElboBreakdown:
    loss: Tensor
    recon: Tensor
    kl: Tensor
    sup: Tensor | None
    stats: SolveStats

    def to_dict(self) -> dict:
        return {
            "loss": self.loss.item(),
            "recon": self.recon.item(),
            "kl": self.kl.item(),
            "sup": None if self.sup is None else self.sup.item(),
            "nfe": self.stats.nfe,
        }


@dataclass(frozen=True)
class ExtrapolationResult:
    predictions: np.ndarray
    mse: float | None = None
    conditioned_mse: float | None = None
    stats: SolveStats = SolveStats()
