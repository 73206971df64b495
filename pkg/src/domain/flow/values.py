from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from src.domain.base.values import BaseCompositeValueObject
from src.domain.diffcore.mlp import Activation, Mlp
from src.domain.diffcore.tape import ParameterRegistry
from src.domain.diffcore.tensor import Tensor
from src.domain.flow.exceptions import FlowStructureException
from src.domain.odesolve.values import SolverConfig, SolveStats

TraceMode = Literal["exact", "hutchinson"]
EXACT_TRACE_MAX_DIM = 16


@dataclass(frozen=True)
class FlowLayer(BaseCompositeValueObject):
    dynamics: Mlp
    index: int
    solver: SolverConfig = SolverConfig()

    def validate(self):
        if not self.dynamics.time_input or self.dynamics.in_features != self.dynamics.out_features:
            raise FlowStructureException(
                detail=f"layer {self.index} dynamics must map (z, t) of width {self.dynamics.widths[0]} to z"
            )

    @property
    def dim(self) -> int:
        return self.dynamics.out_features


@dataclass(frozen=True)
class FlowStack(BaseCompositeValueObject):
    """K stacked continuous flows; data x = z_0 enters layer 0, the latent z = z_K leaves the last."""

    layers: tuple[FlowLayer, ...]
    dim: int
    trace_mode: TraceMode = "exact"

    def validate(self):
        if not self.layers:
            raise FlowStructureException(detail="at least one layer is required")
        for layer in self.layers:
            if layer.dim != self.dim:
                raise FlowStructureException(detail=f"layer {layer.index} has width {layer.dim}, stack has {self.dim}")
        if self.trace_mode not in ("exact", "hutchinson"):
            raise FlowStructureException(detail=f"unknown trace mode {self.trace_mode!r}")

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @classmethod
    def create(
        cls,
        registry: ParameterRegistry,
        dim: int,
        num_layers: int,
        hidden: tuple[int, ...],
        rng: np.random.Generator,
        solver: SolverConfig = SolverConfig(),
        trace_mode: TraceMode = "exact",
        activation: Activation = "softplus",
        prefix: str = "flow",
        init_scale: float = 0.5,
    ) -> FlowStack:
        layers = tuple(
            FlowLayer(
                dynamics=Mlp.create(
                    registry,
                    f"{prefix}.{index}",
                    (dim + 1, *hidden, dim),
                    rng,
                    activation=activation,
                    time_input=True,
                    init_scale=init_scale,
                ),
                index=index,
                solver=solver,
            )
            for index in range(num_layers)
        )
        return cls(layers=layers, dim=dim, trace_mode=trace_mode)


@dataclass(frozen=True)
class FlowPass:
    z: Tensor
    delta_logp: Tensor
    stats: tuple[SolveStats, ...]
    tolerances: tuple[float, ...]

    @property
    def total_nfe(self) -> int:
        return sum(item.nfe for item in self.stats)
