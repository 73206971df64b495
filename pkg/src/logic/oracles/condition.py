from __future__ import annotations

import math

import numpy as np

from scipy import stats

from src.domain.condition.service import conditional_loss, conditional_sample, standard_normal_log_prob
from src.domain.diffcore.tape import ParameterRegistry, Tape
from src.domain.synthdata.seeds import SeedStream
from src.domain.synthdata.values import Labeled2dSpec
from src.domain.train.datasets import flow_dataset
from src.domain.train.models import build_flow
from src.domain.train.service import evaluate, fixed_tolerance
from src.domain.train.values import DataConfig, ModelConfig, TrainConfig
from src.logic.oracles.checks import parameter_gradient_check, randomize, relative_error
from src.logic.oracles.registry import OracleOutcome, oracle

EVAL_TOLERANCES = (1e-5, 1e-6, 1e-7, 1e-8)


def small_conditional_config(task: str, seed: int = 0, classes: int = 4, per_class: int = 50) -> TrainConfig:
    corners = Labeled2dSpec().means[:classes]
    labeled = Labeled2dSpec(means=corners, stds=((0.5, 0.5),) * classes, samples_per_class=per_class)
    return TrainConfig(
        task=task,
        seed=seed,
        epochs=1,
        model=ModelConfig(hidden=(16, 16)),
        data=DataConfig(labeled=labeled, n_test=classes * per_class),
    )


@oracle("condition.gaussian_log_prob")
def gaussian_log_prob() -> OracleOutcome:
    z = SeedStream(31).normal("oracle.gaussian.z", (100, 3))
    ours = standard_normal_log_prob(z).value
    reference = stats.norm.logpdf(z).sum(axis=-1)
    error = float(np.max(np.abs(ours - reference)))
    return OracleOutcome(measured=error, expected=0.0, tolerance=1e-12, passed=error <= 1e-12)


@oracle("condition.losses_finite")
def losses_finite() -> OracleOutcome:
    values = {}
    for task in ("infocnf", "ccnf"):
        config = small_conditional_config(task, classes=2, per_class=16)
        data = flow_dataset(config)
        registry = ParameterRegistry()
        bundle = build_flow(config, registry, SeedStream(config.seed).generator("init"), data.class_counts)
        breakdown = conditional_loss(bundle.model, data.train_x, data.train_y, Tape(registry, recording=False), 1.0)
        values[task] = breakdown.total.item()
    finite = all(math.isfinite(value) for value in values.values())
    return OracleOutcome(
        measured=max(abs(value) for value in values.values()), expected="finite", tolerance="-", passed=finite,
        detail=", ".join(f"{task}={value:.4f}" for task, value in values.items()),
    )


@oracle("condition.identity_flow_samples")
def identity_flow_samples() -> OracleOutcome:
    """Zero dynamics and a zero prior leave conditional samples standard normal."""
    config = small_conditional_config("infocnf")
    registry = ParameterRegistry()
    bundle = build_flow(config, registry, SeedStream(0).generator("init"), (4,))
    for entry in registry.entries:
        if entry.name.startswith("flow."):
            registry.set(entry.name, np.zeros(entry.shape))
    draws = conditional_sample(
        bundle.model, 1, 10_000, Tape(registry, recording=False), SeedStream(32).generator("oracle.samples")
    )
    p_values = [stats.kstest(draws[:, column], "norm").pvalue for column in range(draws.shape[1])]
    return OracleOutcome(
        measured=float(min(p_values)), expected="> 0.01", tolerance="KS test", passed=min(p_values) > 0.01
    )


@oracle("condition.partition_parameter_count", criterion="partition-efficiency")
def partition_parameter_count() -> OracleOutcome:
    counts = {}
    for task in ("infocnf", "ccnf"):
        config = small_conditional_config(task)
        registry = ParameterRegistry()
        bundle = build_flow(config, registry, SeedStream(0).generator("init"), (4,))
        counts[task] = bundle.model.conditioning_parameter_count(registry)
    return OracleOutcome(
        measured=float(counts["infocnf"]),
        expected=f"< {counts['ccnf']}",
        tolerance="-",
        passed=counts["infocnf"] < counts["ccnf"],
        detail=f"infocnf {counts['infocnf']}, ccnf {counts['ccnf']}",
    )


@oracle("condition.eval_tolerance_insensitivity", criterion="eval-tolerance-insensitivity")
def eval_tolerance_insensitivity() -> OracleOutcome:
    config = small_conditional_config("infocnf")
    data = flow_dataset(config)
    registry = ParameterRegistry()
    bundle = build_flow(config, registry, SeedStream(0).generator("init"), data.class_counts)
    randomize(registry, ("prior.", "classifier."), SeedStream(33).generator("oracle.heads"))
    results = [evaluate(bundle, registry, data.test_x, data.test_y, tolerance=tol) for tol in EVAL_TOLERANCES]
    return tolerance_agreement(results)


def tolerance_agreement(results) -> OracleOutcome:
    nlls = [item.nll for item in results]
    errors = {item.err for item in results}
    spread = max(nlls) - min(nlls)
    return OracleOutcome(
        measured=spread,
        expected=0.0,
        tolerance=1e-3,
        passed=spread <= 1e-3 and len(errors) == 1,
        detail=f"test errors {sorted(errors)}",
    )


@oracle("condition.infocnf_gradient", criterion="gradient-fidelity")
def infocnf_gradient() -> OracleOutcome:
    """Full conditional loss through a tight adaptive solve against central differences on 20 parameters."""
    config = small_conditional_config("infocnf", classes=2, per_class=4)
    data = flow_dataset(config)
    registry = ParameterRegistry()
    bundle = build_flow(config, registry, SeedStream(34).generator("init"), data.class_counts)
    randomize(registry, ("prior.", "classifier."), SeedStream(34).generator("oracle.heads"))
    solver_for = fixed_tolerance(1e-10)
    positions = SeedStream(35).generator("oracle.positions").choice(registry.size, 20, replace=False)

    def loss(tape: Tape):
        return conditional_loss(bundle.model, data.train_x, data.train_y, tape, 1.0, solver_for=solver_for).total

    analytic, numeric = parameter_gradient_check(registry, loss, sorted(positions.tolist()))
    error = relative_error(analytic, numeric)
    return OracleOutcome(measured=error, expected=0.0, tolerance=1e-4, passed=error <= 1e-4)
