import math

import numpy as np
import pytest

from scipy import stats

from src.domain.diffcore.tape import ParameterRegistry
from src.domain.synthdata.seeds import SeedStream
from src.domain.synthdata.values import Labeled2dSpec, SpiralCorpusSpec
from src.domain.train.datasets import flow_dataset, spiral_data
from src.domain.train.entities import AdamState, TrainingSession
from src.domain.train.events import BatchSkippedEvent, EpochCompletedEvent, TrainingFinishedEvent
from src.domain.train.exceptions import (
    CheckpointLayoutException,
    ScheduleException,
    TrainConfigException,
    TrainingAbortedException,
    TrainingException,
    UnsupportedModelException,
)
from src.domain.train.models import build_flow
from src.domain.train.service import (
    FlowTrainer,
    LatentOdeTrainer,
    adam_step,
    batch_size_sensitivity,
    evaluate,
    minibatches,
    restore_flow,
    riemann_area,
    riemann_normalization,
    train_ccnf,
    train_density,
    train_infocnf,
    train_latentode,
)
from src.domain.train.values import (
    DataConfig,
    EpochMetrics,
    ModelConfig,
    OptimizerConfig,
    ToleranceConfig,
    TrainConfig,
)


def density_config(**overrides) -> TrainConfig:
    values = {
        "task": "density",
        "epochs": 2,
        "batch_size": 32,
        "model": ModelConfig(hidden=(8, 8)),
        "tolerance": ToleranceConfig(value=1e-3),
        "data": DataConfig(n_train=64, n_test=64),
    }
    values.update(overrides)
    return TrainConfig(**values)


def labeled_config(task: str = "infocnf", gated: bool = False) -> TrainConfig:
    return TrainConfig(
        task=task,
        epochs=1,
        batch_size=32,
        model=ModelConfig(hidden=(8, 8), gate_hidden=4),
        tolerance=ToleranceConfig(mode="gated" if gated else "fixed", value=1e-3),
        data=DataConfig(n_test=40, labeled=Labeled2dSpec(samples_per_class=16)),
    )


def spiral_config(**overrides) -> TrainConfig:
    values = {
        "task": "latentode",
        "epochs": 2,
        "batch_size": 4,
        "model": ModelConfig(latent_units=4, encoder_hidden=6),
        "tolerance": ToleranceConfig(value=1e-3, eval_value=1e-3),
        "data": DataConfig(
            spirals=SpiralCorpusSpec(n_curves=8, curve_length=60, window=6, horizon=4), test_curves=4
        ),
    }
    values.update(overrides)
    return TrainConfig(**values)


class TestAdam:
    def test_first_step_moves_by_the_learning_rate(self):
        theta = adam_step(np.array([1.0]), np.array([2.0]), AdamState.zeros(1), 0.1)
        assert theta[0] == pytest.approx(0.9, abs=1e-6)

    def test_zero_gradient_keeps_parameters(self):
        params = np.array([0.5, -1.5])
        np.testing.assert_array_equal(adam_step(params, np.zeros(2), AdamState.zeros(2), 0.1), params)

    def test_converges_on_a_quadratic(self):
        theta, state = np.array([1.0]), AdamState.zeros(1)
        for _ in range(200):
            theta = adam_step(theta, 2.0 * theta, state, 0.1)
        assert abs(theta[0]) < 1e-3
        assert state.step == 200

    def test_non_finite_gradient_names_parameters(self, registry):
        registry.register("good", np.zeros(2))
        registry.register("bad", np.zeros(1))
        with pytest.raises(TrainingException) as err:
            adam_step(registry.flat, np.array([0.0, 0.0, math.nan]), AdamState.zeros(3), 0.1, registry, 3, 7)
        assert err.value.diagnostics["parameters"] == ["bad"]
        assert "epoch 3, batch 7" in err.value.title


class TestConfig:
    def test_schedule_applies_from_its_epoch(self):
        optimizer = OptimizerConfig(lr=1e-3, schedule=((10, 1e-4), (20, 1e-5)))
        assert [optimizer.lr_at(epoch) for epoch in (1, 10, 19, 20)] == [1e-3, 1e-4, 1e-4, 1e-5]

    @pytest.mark.parametrize("schedule", [((5, 1e-2),), ((5, 1e-4), (3, 1e-5)), ((2, -1.0),)])
    def test_schedule_must_decrease(self, schedule):
        with pytest.raises(ScheduleException):
            OptimizerConfig(lr=1e-3, schedule=schedule)

    def test_default_datasets(self):
        assert density_config().dataset == "mix1d"
        assert labeled_config().dataset == "labeled2d"
        assert spiral_config().dim == 2

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"task": "infocnf", "data": DataConfig(dataset="mix1d")},
            {"task": "density", "data": DataConfig(dataset="spirals")},
            {"task": "latentode", "tolerance": ToleranceConfig(mode="gated")},
            {"task": "density", "epochs": 0},
            {"task": "clustering"},
        ],
    )
    def test_invalid_combinations(self, kwargs):
        with pytest.raises(TrainConfigException):
            TrainConfig(**kwargs)

    def test_tolerance_range(self):
        with pytest.raises(TrainConfigException):
            ToleranceConfig(value=1.0)

    def test_bits_per_dim(self):
        metrics = EpochMetrics(epoch=1, train_nll=0.0, test_nll=2.0 * math.log(2.0), test_err=0.0, mean_nfe=0.0, lr=0.1, dim=2)
        assert metrics.test_bits_per_dim == pytest.approx(1.0)
        assert "wall_time" not in metrics.to_row()


class TestSession:
    def test_minibatches_cover_every_index_once(self):
        batches = minibatches(10, 4, SeedStream(1).generator("order"))
        assert [len(batch) for batch in batches] == [4, 4, 2]
        np.testing.assert_array_equal(np.sort(np.concatenate(batches)), np.arange(10))

    def test_skip_policy(self):
        session = TrainingSession(config=density_config())
        session.skip_batch(1, 3, "solver diverged")
        session.check_skips(1, 20)
        session.skip_batch(1, 4, "solver diverged")
        with pytest.raises(TrainingAbortedException):
            session.check_skips(1, 20)
        events = session.pull_events()
        assert [type(event) for event in events] == [BatchSkippedEvent, BatchSkippedEvent]
        assert session.pull_events() == []

    def test_alpha_comes_from_the_config(self):
        session = TrainingSession(config=density_config(tolerance=ToleranceConfig(alpha=0.3)))
        assert session.alpha == 0.3


class TestFlowTraining:
    def test_density_run(self):
        trainer = train_density(density_config(), flow_dataset(density_config()))
        history = trainer.session.history
        assert [item.epoch for item in history] == [1, 2]
        assert all(math.isfinite(item.test_nll) and item.mean_nfe > 0 for item in history)
        assert math.isnan(history[-1].test_err)
        events = trainer.session.pull_events()
        assert isinstance(events[0], EpochCompletedEvent)
        assert events[0].solves
        assert isinstance(events[-1], TrainingFinishedEvent)
        assert events[-1].epochs == 2

    def test_same_seed_same_history(self):
        config = density_config(epochs=1)
        data = flow_dataset(config)
        runs = [FlowTrainer.create(config, data) for _ in range(2)]
        for trainer in runs:
            trainer.run()
        first, second = (trainer.session.history[0].to_row() for trainer in runs)
        assert repr(first) == repr(second)

    def test_gated_infocnf_logs_gates(self):
        config = labeled_config(gated=True)
        trainer = FlowTrainer.create(config, flow_dataset(config))
        metrics = trainer.run_epoch(1)
        assert 0.0 <= metrics.test_err <= 1.0
        assert trainer.session.alpha is not None
        batches = len(minibatches(64, 32))
        assert len(trainer.session.gates) == batches * config.model.num_layers
        assert all(1e-8 <= record.tolerance <= 1e-1 for record in trainer.session.gates)

    def test_latentode_task_needs_its_own_trainer(self):
        with pytest.raises(UnsupportedModelException):
            FlowTrainer.create(spiral_config(), flow_dataset(density_config()))


class TestEvaluation:
    def test_checkpoint_restores_bit_exact_metrics(self):
        config = density_config(epochs=1)
        data = flow_dataset(config)
        trainer = FlowTrainer.create(config, data)
        trainer.run()
        bundle, registry = restore_flow(config, trainer.checkpoint())
        restored = evaluate(bundle, registry, data.test_x, tolerance=config.tolerance.eval_value)
        assert repr(restored.to_row()) == repr(trainer.evaluate().to_row())

    def test_layout_mismatch(self):
        config = density_config(epochs=1)
        trainer = FlowTrainer.create(config, flow_dataset(config))
        with pytest.raises(CheckpointLayoutException):
            restore_flow(density_config(model=ModelConfig(hidden=(4,))), trainer.checkpoint())

    def test_learned_mode_needs_gates(self):
        config = labeled_config()
        data = flow_dataset(config)
        registry = ParameterRegistry()
        bundle = build_flow(config, registry, SeedStream(0).generator("init"), data.class_counts)
        with pytest.raises(UnsupportedModelException):
            evaluate(bundle, registry, data.test_x, data.test_y, mode="learned")

    def test_learned_mode_per_batch_size(self):
        config = labeled_config(gated=True)
        data = flow_dataset(config)
        registry = ParameterRegistry()
        bundle = build_flow(config, registry, SeedStream(0).generator("init"), data.class_counts)
        results = batch_size_sensitivity(bundle, registry, data.test_x, data.test_y, batch_sizes=(1, 40))
        assert [item.batch_size for item in results] == [1, 40]
        assert all(item.tolerance is None and item.to_row()["tolerance"] == "learned" for item in results)

    def test_riemann_area_of_a_known_density(self):
        assert riemann_area(stats.norm.logpdf, -8.0, 8.0, 1e-3) == pytest.approx(1.0, abs=1e-6)

    def test_identity_flow_is_normalized(self):
        config = density_config()
        registry = ParameterRegistry()
        bundle = build_flow(config, registry, SeedStream(0).generator("init"))
        registry.assign(np.zeros(registry.size))
        result = riemann_normalization(bundle, registry, step=1e-2)
        assert result.error <= 1e-4

    def test_normalization_needs_one_dimension(self):
        config = TrainConfig(task="density", data=DataConfig(dataset="labeled2d"))
        registry = ParameterRegistry()
        bundle = build_flow(config, registry, SeedStream(0).generator("init"))
        with pytest.raises(UnsupportedModelException):
            riemann_normalization(bundle, registry)


class TestLatentOdeTraining:
    def test_run(self):
        config = spiral_config()
        data = spiral_data(config)
        future_times, truth = data.future()
        trainer = LatentOdeTrainer.create(config, data.train_batch, data.test_batch, future_times, truth)
        trainer.run()
        last = trainer.session.last
        assert last.epoch == 2
        assert math.isfinite(last.test_mse)
        assert math.isfinite(last.test_mse_conditioned)
        assert trainer.checkpoint().task == "latentode"

    def test_early_stop(self):
        config = spiral_config(early_stop_patience=1)
        data = spiral_data(config)
        trainer = LatentOdeTrainer.create(config, data.train_batch, data.test_batch, *data.future())
        assert not trainer.should_stop
        trainer.stale_epochs = 1
        assert trainer.should_stop

    def test_spiral_data_needs_spirals(self):
        with pytest.raises(TrainConfigException):
            spiral_data(density_config())


class TestEntryPoints:
    @pytest.mark.parametrize("train", [train_density, train_ccnf])
    def test_task_must_match(self, train):
        config = labeled_config("infocnf")
        with pytest.raises(TrainConfigException):
            train(config, flow_dataset(config))

    @pytest.mark.parametrize("task, train", [("infocnf", train_infocnf), ("ccnf", train_ccnf)])
    def test_conditional_runs(self, task, train):
        config = labeled_config(task)
        trainer = train(config, flow_dataset(config))
        assert len(trainer.session.history) == 1
        assert trainer.checkpoint().architecture["class_counts"] == [4]

    def test_latentode(self):
        config = spiral_config(epochs=1)
        data = spiral_data(config)
        trainer = train_latentode(config, data.train_batch, data.test_batch, *data.future())
        assert trainer.session.last.epoch == 1
        with pytest.raises(TrainConfigException):
            train_latentode(density_config(), data.train_batch, data.test_batch, *data.future())
