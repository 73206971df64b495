"""Training-scale checks at reduced settings; full-scale runs go through ``train``/``eval`` with the shipped configs."""

from __future__ import annotations

from functools import cache

import numpy as np

from src.domain.synthdata.values import Labeled2dSpec, SpiralCorpusSpec
from src.domain.train.datasets import flow_dataset, spiral_data
from src.domain.train.service import FlowTrainer, LatentOdeTrainer, riemann_normalization
from src.domain.train.values import DataConfig, ModelConfig, OptimizerConfig, ToleranceConfig, TrainConfig
from src.logic.oracles.condition import EVAL_TOLERANCES, tolerance_agreement
from src.logic.oracles.registry import OracleOutcome, oracle

SEEDS = (0, 1, 2)
FLOW_EPOCHS = 15
SPIRAL_EPOCHS = 10


def _conditional_config(task: str, seed: int, gated: bool = False) -> TrainConfig:
    return TrainConfig(
        task=task,
        seed=seed,
        epochs=FLOW_EPOCHS,
        batch_size=100,
        optimizer=OptimizerConfig(lr=5e-3),
        model=ModelConfig(hidden=(32, 32)),
        tolerance=ToleranceConfig(mode="gated" if gated else "fixed"),
        data=DataConfig(labeled=Labeled2dSpec(samples_per_class=200), n_test=400),
    )


@cache
def _trained_flow(task: str, seed: int, gated: bool = False) -> FlowTrainer:
    config = _conditional_config(task, seed, gated)
    trainer = FlowTrainer.create(config, flow_dataset(config))
    trainer.run()
    return trainer


@oracle("experiment.density_normalization", criterion="normalization")
def density_normalization() -> OracleOutcome:
    config = TrainConfig(
        task="density",
        epochs=FLOW_EPOCHS,
        batch_size=100,
        optimizer=OptimizerConfig(lr=5e-3),
        data=DataConfig(n_train=1000, n_test=500),
    )
    data = flow_dataset(config)
    trainer = FlowTrainer.create(config, data)
    trainer.run()
    result = riemann_normalization(trainer.bundle, trainer.registry)
    exact_nll = -float(np.mean(config.data.mixture.log_density(data.test_x[:, 0])))
    gap = trainer.session.last.test_nll - exact_nll
    return OracleOutcome(
        measured=result.area, expected=1.0, tolerance=0.01, passed=result.error <= 0.01,
        detail=f"test NLL {gap:+.3f} nats from the exact mixture",
    )


@oracle("experiment.eval_tolerance_insensitivity", criterion="eval-tolerance-insensitivity")
def eval_tolerance_insensitivity() -> OracleOutcome:
    trainer = _trained_flow("infocnf", SEEDS[0])
    return tolerance_agreement([trainer.evaluate(tolerance) for tolerance in EVAL_TOLERANCES])


@oracle("experiment.nfe_tolerance", criterion="nfe-tolerance-monotonicity")
def nfe_tolerance() -> OracleOutcome:
    trainer = _trained_flow("infocnf", SEEDS[0])
    loose, tight = trainer.evaluate(1e-3), trainer.evaluate(1e-7)
    return OracleOutcome(
        measured=tight.mean_nfe - loose.mean_nfe, expected="> 0", tolerance="-",
        passed=tight.mean_nfe > loose.mean_nfe,
        detail=f"mean nfe {loose.mean_nfe:.1f} at 1e-3, {tight.mean_nfe:.1f} at 1e-7",
    )


@oracle("experiment.partition_efficiency", criterion="partition-efficiency")
def partition_efficiency() -> OracleOutcome:
    errors = {task: [] for task in ("infocnf", "ccnf")}
    counts = {}
    for task in errors:
        for seed in SEEDS:
            trainer = _trained_flow(task, seed)
            errors[task].append(trainer.evaluate().err)
            counts[task] = trainer.model.conditioning_parameter_count(trainer.registry)
    info, ccnf = float(np.mean(errors["infocnf"])), float(np.mean(errors["ccnf"]))
    return OracleOutcome(
        measured=info, expected=f"<= {ccnf + 0.01:.4f}", tolerance=0.01,
        passed=info <= ccnf + 0.01 and counts["infocnf"] < counts["ccnf"],
        detail=f"mean test error infocnf {info:.4f}, ccnf {ccnf:.4f}; conditioning parameters {counts}",
    )


@oracle("experiment.learned_tolerance", criterion="learned-tolerance-nfe")
def learned_tolerance() -> OracleOutcome:
    fixed_nfe, gated_nfe, nll_gaps = [], [], []
    for seed in SEEDS:
        fixed, gated = _trained_flow("infocnf", seed), _trained_flow("infocnf", seed, gated=True)
        fixed_nfe.append(np.mean([item.mean_nfe for item in fixed.session.history]))
        gated_nfe.append(np.mean([item.mean_nfe for item in gated.session.history]))
        nll_gaps.append(gated.session.last.test_nll - fixed.session.last.test_nll)
    reduction = 1.0 - float(np.mean(gated_nfe)) / float(np.mean(fixed_nfe))
    gap = float(np.mean(nll_gaps))
    return OracleOutcome(
        measured=reduction, expected=">= 0.05", tolerance="NLL within 0.05 nats",
        passed=reduction >= 0.05 and gap <= 0.05,
        detail=f"training NFE {np.mean(fixed_nfe):.1f} fixed, {np.mean(gated_nfe):.1f} gated; NLL gap {gap:+.4f}",
    )


def _spiral_config(seed: int, partitioned: bool) -> TrainConfig:
    corpus = SpiralCorpusSpec(n_curves=100)
    return TrainConfig(
        task="latentode",
        seed=seed,
        epochs=SPIRAL_EPOCHS,
        batch_size=50,
        optimizer=OptimizerConfig(lr=1e-2),
        model=ModelConfig(partitioned=partitioned),
        tolerance=ToleranceConfig(value=1e-3, eval_value=1e-5),
        data=DataConfig(spirals=corpus, test_curves=40),
    )


@oracle("experiment.spiral_extrapolation", criterion="spiral-extrapolation")
def spiral_extrapolation() -> OracleOutcome:
    wins, summary = 0, []
    for seed in SEEDS:
        mse = {}
        for partitioned in (True, False):
            config = _spiral_config(seed, partitioned)
            data = spiral_data(config)
            future_times, truth = data.future()
            trainer = LatentOdeTrainer.create(config, data.train_batch, data.test_batch, future_times, truth)
            trainer.run()
            mse[partitioned] = trainer.evaluate()["mse"]
        wins += mse[True] < mse[False]
        summary.append(f"{mse[True]:.3f}/{mse[False]:.3f}")
    return OracleOutcome(
        measured=float(wins), expected=">= 2 of 3", tolerance="-", passed=wins >= 2,
        detail="partitioned/baseline MSE " + ", ".join(summary),
    )
