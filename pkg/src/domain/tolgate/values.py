from __future__ import annotations

import math

from dataclasses import dataclass

import numpy as np

from src.domain.base.values import BaseCompositeValueObject
from src.domain.diffcore.mlp import Mlp
from src.domain.diffcore.tape import ParameterRegistry
from src.domain.diffcore.tensor import Tensor
from src.domain.odesolve.values import GATE_TOLERANCE_MAX, GATE_TOLERANCE_MIN
from src.domain.tolgate.exceptions import GateCountException

LOG10_MIN = math.log10(GATE_TOLERANCE_MIN)
LOG10_MAX = math.log10(GATE_TOLERANCE_MAX)
INITIAL_LOG10_TOLERANCE = -5.0
INITIAL_SIGMA = 0.5


@dataclass(frozen=True)
class GatePolicy(BaseCompositeValueObject):
    """One gate network per flow layer mapping a batch summary to (mu, log sigma) over log10-tolerance."""

    gates: tuple[Mlp, ...]
    dim: int

    def validate(self):
        for gate in self.gates:
            if gate.in_features != self.dim or gate.out_features != 2:
                raise GateCountException(expected=self.dim, received=gate.in_features)

    @property
    def num_layers(self) -> int:
        return len(self.gates)

    @classmethod
    def create(
        cls,
        registry: ParameterRegistry,
        num_layers: int,
        dim: int,
        hidden: int,
        rng: np.random.Generator,
        prefix: str = "gate",
        initial_log10_tolerance: float = INITIAL_LOG10_TOLERANCE,
        initial_sigma: float = INITIAL_SIGMA,
    ) -> GatePolicy:
        gates = []
        for index in range(num_layers):
            gate = Mlp.create(
                registry, f"{prefix}.{index}", (dim, hidden, 2), rng, activation="tanh", zero_output=True
            )
            registry.set(f"{gate.name}.b1", np.array([initial_log10_tolerance, math.log(initial_sigma)]))
            gates.append(gate)
        return cls(gates=tuple(gates), dim=dim)


@dataclass(frozen=True)
class GateSample:
    layer: int
    mu: float
    sigma: float
    log10_tolerance: float
    tolerance: float
    log_prob: Tensor
    nfe: int = 0

    @property
    def reward(self) -> float:
        return -float(self.nfe)

    def to_dict(self) -> dict:
        return {
            "layer": self.layer,
            "mu": self.mu,
            "sigma": self.sigma,
            "log10_tolerance": self.log10_tolerance,
            "tolerance": self.tolerance,
            "nfe": self.nfe,
        }
