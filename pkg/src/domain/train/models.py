"""Model construction from a training config.

Building is deterministic in the config and the init generator, so a checkpoint only needs
the config and the flat parameter vector to be rebuilt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.domain.condition.values import Classifier, ConditionalFlowModel, ConditionalPrior, LatentPartition
from src.domain.diffcore.tape import ParameterRegistry
from src.domain.flow.values import FlowStack
from src.domain.latentode.values import LatentOdeModel
from src.domain.odesolve.values import SolverConfig
from src.domain.tolgate.values import GatePolicy
from src.domain.train.values import TrainConfig


@dataclass(frozen=True)
class FlowBundle:
    model: ConditionalFlowModel
    gates: GatePolicy | None = None


def flow_partition(task: str, dim: int) -> LatentPartition:
    return LatentPartition.full(dim) if task == "ccnf" else LatentPartition.halves(dim)


def build_flow(
    config: TrainConfig,
    registry: ParameterRegistry,
    rng: np.random.Generator,
    class_counts: tuple[int, ...] = (),
) -> FlowBundle:
    solver = SolverConfig(
        rtol=config.tolerance.value,
        atol=config.tolerance.value,
        max_steps=config.model.max_steps,
    )
    stack = FlowStack.create(
        registry,
        dim=config.dim,
        num_layers=config.model.num_layers,
        hidden=config.model.hidden,
        rng=rng,
        solver=solver,
        trace_mode=config.model.trace_mode,
        activation=config.model.activation,
        init_scale=config.model.init_scale,
    )
    if config.task == "density":
        model = ConditionalFlowModel(kind="density", stack=stack)
    else:
        partition = flow_partition(config.task, config.dim)
        model = ConditionalFlowModel(
            kind=config.task,
            stack=stack,
            partition=partition,
            prior=ConditionalPrior.create(registry, partition, class_counts),
            classifier=Classifier.create(registry, partition, class_counts, dropout=config.model.dropout),
        )
    gates = None
    if config.is_gated:
        gates = GatePolicy.create(registry, config.model.num_layers, config.dim, config.model.gate_hidden, rng)
    return FlowBundle(model=model, gates=gates)


def build_latentode(
    config: TrainConfig,
    registry: ParameterRegistry,
    rng: np.random.Generator,
) -> LatentOdeModel:
    return LatentOdeModel.create(
        registry,
        rng,
        partitioned=config.model.partitioned,
        hidden=config.model.encoder_hidden,
        units=config.model.latent_units,
    )


def architecture(config: TrainConfig, registry: ParameterRegistry, class_counts: tuple[int, ...] = ()) -> dict:
    summary = {
        "task": config.task,
        "dim": config.dim,
        "class_counts": list(class_counts),
        "parameters": registry.size,
    }
    if config.task in ("infocnf", "ccnf"):
        summary["conditioning_parameters"] = registry.count("prior.") + registry.count("classifier.")
        summary["supervised_width"] = flow_partition(config.task, config.dim).d_y
    if config.is_gated:
        summary["gate_parameters"] = registry.count("gate.")
    return summary
