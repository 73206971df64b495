from __future__ import annotations

import math
import time

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from src.domain.condition.service import (
    conditional_log_prior,
    conditional_loss,
    density_log_prob,
    density_loss,
    marginal_log_prob,
    predict,
)
from src.domain.condition.values import ConditionalFlowModel, LossBreakdown
from src.domain.diffcore.tape import ParameterRegistry, Tape, backward
from src.domain.diffcore.tensor import Tensor
from src.domain.flow.exceptions import LayerSolveException
from src.domain.flow.service import SolverSelector, forward_density
from src.domain.flow.values import EXACT_TRACE_MAX_DIM, FlowLayer
from src.domain.latentode.service import elbo, extrapolate, predict_labels
from src.domain.latentode.values import LatentOdeModel, SpiralBatch
from src.domain.odesolve.exceptions import SolverException
from src.domain.odesolve.values import SolverConfig
from src.domain.synthdata.seeds import SeedStream
from src.domain.tolgate.entities import Baseline
from src.domain.tolgate.service import GateController, calibrate_alpha, gated_objective
from src.domain.train.entities import AdamState, TrainingSession
from src.domain.train.exceptions import (
    CheckpointLayoutException,
    TrainConfigException,
    TrainingException,
    UnsupportedModelException,
)
from src.domain.train.models import FlowBundle, architecture, build_flow, build_latentode
from src.domain.train.values import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_EPS,
    EVAL_TOLERANCE,
    Checkpoint,
    EpochMetrics,
    EvaluationMode,
    EvaluationResult,
    FlowDataset,
    GateRecord,
    NormalizationResult,
    SolveRecord,
    TrainConfig,
)

CHECKPOINT_FORMAT_VERSION = 1
LEARNED_BATCH_SIZES = (1, 256, 2048)


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    lr: float,
    registry: ParameterRegistry | None = None,
    epoch: int = 0,
    batch: int = 0,
) -> np.ndarray:
    """Bias-corrected Adam; updates ``state`` in place and returns the new parameters."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != params.shape or state.m.shape != params.shape:
        raise TrainConfigException(field="gradient shape", value=(params.shape, grads.shape))
    if not np.all(np.isfinite(grads)):
        raise TrainingException(epoch=epoch, batch=batch, diagnostics=nonfinite_diagnostics(grads, registry))
    state.step += 1
    state.m = ADAM_BETA1 * state.m + (1.0 - ADAM_BETA1) * grads
    state.v = ADAM_BETA2 * state.v + (1.0 - ADAM_BETA2) * np.square(grads)
    m_hat = state.m / (1.0 - ADAM_BETA1**state.step)
    v_hat = state.v / (1.0 - ADAM_BETA2**state.step)
    return params - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


def nonfinite_diagnostics(grads: np.ndarray, registry: ParameterRegistry | None) -> dict:
    bad = ~np.isfinite(grads)
    diagnostics = {"count": int(bad.sum()), "size": int(grads.size)}
    if registry is not None:
        diagnostics["parameters"] = [
            entry.name for entry in registry.entries if np.any(bad[entry.offset : entry.stop])
        ]
    return diagnostics


def minibatches(n: int, batch_size: int, rng: np.random.Generator | None = None) -> list[np.ndarray]:
    order = np.arange(n) if rng is None else rng.permutation(n)
    return [order[start : start + batch_size] for start in range(0, n, batch_size)]


def fixed_tolerance(tolerance: float) -> SolverSelector:
    def select(layer: FlowLayer, layer_input: np.ndarray) -> SolverConfig:
        return layer.solver.with_tolerance(tolerance)

    return select


def _exact_for_evaluation(model: ConditionalFlowModel) -> ConditionalFlowModel:
    if model.stack.trace_mode == "exact" or model.stack.dim > EXACT_TRACE_MAX_DIM:
        return model
    return replace(model, stack=replace(model.stack, trace_mode="exact"))


def _probe_generator(streams: SeedStream | None) -> np.random.Generator | None:
    return streams.fresh("eval.hutchinson") if streams is not None else None


def evaluate(
    bundle: FlowBundle,
    registry: ParameterRegistry,
    x: np.ndarray,
    labels: np.ndarray | None = None,
    mode: EvaluationMode = "fixed",
    tolerance: float = EVAL_TOLERANCE,
    batch_size: int = 1000,
    streams: SeedStream | None = None,
) -> EvaluationResult:
    """Test NLL, classification error and mean NFE per solve over the data in order.

    Fixed mode uses one tolerance everywhere. Learned mode takes each gate's mean output for
    every evaluation batch. Traces are exact whenever the width allows it; wider models draw
    Hutchinson probes from the ``eval.hutchinson`` stream of ``streams``, restarted per call.
    """
    if mode == "learned" and bundle.gates is None:
        raise UnsupportedModelException(detail="learned-tolerance evaluation needs a gated model")
    model = _exact_for_evaluation(bundle.model)
    probes = _probe_generator(streams)
    x = np.asarray(x, dtype=np.float64)
    log_px_total = marginal_total = 0.0
    errors = 0
    nfes: list[int] = []
    for indices in minibatches(len(x), batch_size):
        tape = Tape(registry, recording=False)
        if mode == "learned":
            solver_for: SolverSelector = GateController(bundle.gates, tape, rng=None)
        else:
            solver_for = fixed_tolerance(tolerance)
        flow = forward_density(model.stack, Tensor(x[indices]), tape, solver_for=solver_for, rng=probes)
        nfes.extend(item.nfe for item in flow.stats)
        if model.is_conditional:
            batch_labels = model.check_labels(labels[indices])
            log_px = conditional_log_prior(flow.z, batch_labels, model, tape) - flow.delta_logp
            marginal_total += float(marginal_log_prob(model, flow, tape).value.sum())
            errors += int(np.sum(predict(model, flow.z, tape)[:, 0] != batch_labels[:, 0]))
        else:
            log_px = density_log_prob(flow)
        log_px_total += float(log_px.value.sum())
    n = len(x)
    conditional = model.is_conditional
    return EvaluationResult(
        mode=mode,
        tolerance=tolerance if mode == "fixed" else None,
        batch_size=batch_size,
        nll=-log_px_total / n,
        err=errors / n if conditional else math.nan,
        mean_nfe=float(np.mean(nfes)),
        marginal_nll=-marginal_total / n if conditional else math.nan,
        dim=model.stack.dim,
    )


def batch_size_sensitivity(
    bundle: FlowBundle,
    registry: ParameterRegistry,
    x: np.ndarray,
    labels: np.ndarray | None = None,
    batch_sizes: Sequence[int] = LEARNED_BATCH_SIZES,
    streams: SeedStream | None = None,
) -> list[EvaluationResult]:
    return [
        evaluate(bundle, registry, x, labels, mode="learned", batch_size=size, streams=streams) for size in batch_sizes
    ]


def normalization_grid(lo: float, hi: float, step: float) -> np.ndarray:
    count = int(round((hi - lo) / step))
    return lo + step * np.arange(count + 1)


def riemann_area(log_density: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, step: float) -> float:
    grid = normalization_grid(lo, hi, step)
    return float(np.sum(np.exp(log_density(grid))) * step)


def model_log_density(
    bundle: FlowBundle,
    registry: ParameterRegistry,
    x: np.ndarray,
    tolerance: float = EVAL_TOLERANCE,
    batch_size: int = 4000,
    streams: SeedStream | None = None,
) -> np.ndarray:
    """log p(x) of an unconditional flow at the given points, shape (n,)."""
    model = _exact_for_evaluation(bundle.model)
    if model.is_conditional:
        raise UnsupportedModelException(detail="pointwise density needs an unconditional flow")
    probes = _probe_generator(streams)
    x = np.asarray(x, dtype=np.float64).reshape(-1, model.stack.dim)
    values = []
    for indices in minibatches(len(x), batch_size):
        tape = Tape(registry, recording=False)
        flow = forward_density(
            model.stack, Tensor(x[indices]), tape, solver_for=fixed_tolerance(tolerance), rng=probes
        )
        values.append(density_log_prob(flow).value)
    return np.concatenate(values)


def riemann_normalization(
    bundle: FlowBundle,
    registry: ParameterRegistry,
    lo: float = -8.0,
    hi: float = 8.0,
    step: float = 1e-3,
    tolerance: float = EVAL_TOLERANCE,
    streams: SeedStream | None = None,
) -> NormalizationResult:
    if bundle.model.stack.dim != 1:
        raise UnsupportedModelException(detail=f"normalization check needs a 1D model, got {bundle.model.stack.dim}D")
    def log_density(grid: np.ndarray) -> np.ndarray:
        return model_log_density(bundle, registry, grid, tolerance, streams=streams)

    area = riemann_area(log_density, lo, hi, step)
    return NormalizationResult(area=area, lo=lo, hi=hi, step=step, tolerance=tolerance)


@dataclass
class FlowTrainer:
    """One epoch at a time over a flow task; the session collects metrics and raw logs."""

    config: TrainConfig
    bundle: FlowBundle
    registry: ParameterRegistry
    data: FlowDataset
    session: TrainingSession
    streams: SeedStream
    adam: AdamState = field(init=False)
    baseline: Baseline | None = field(init=False, default=None)

    def __post_init__(self):
        self.adam = AdamState.zeros(self.registry.size)
        if self.bundle.gates is not None:
            self.baseline = Baseline(
                num_layers=self.bundle.gates.num_layers,
                decay=self.config.tolerance.baseline_decay,
                enabled=self.config.tolerance.baseline,
            )

    @classmethod
    def create(cls, config: TrainConfig, data: FlowDataset, run_dir: str = "") -> FlowTrainer:
        if config.task == "latentode":
            raise UnsupportedModelException(detail="latentode runs use LatentOdeTrainer")
        streams = SeedStream(config.seed)
        registry = ParameterRegistry()
        bundle = build_flow(config, registry, streams.generator("init"), data.class_counts)
        session = TrainingSession(config=config, run_dir=run_dir)
        return cls(config=config, bundle=bundle, registry=registry, data=data, session=session, streams=streams)

    @property
    def model(self) -> ConditionalFlowModel:
        return self.bundle.model

    def _loss(self, indices: np.ndarray, tape: Tape, solver_for: SolverSelector) -> LossBreakdown:
        x = self.data.train_x[indices]
        hutchinson = self.streams.generator("train.hutchinson")
        if not self.model.is_conditional:
            return density_loss(self.model, x, tape, solver_for=solver_for, rng=hutchinson)
        return conditional_loss(
            self.model,
            x,
            self.data.train_y[indices],
            tape,
            self.config.beta,
            solver_for=solver_for,
            rng=hutchinson,
            dropout_rng=self.streams.generator("train.dropout"),
        )

    def train_batch(self, epoch: int, batch: int, indices: np.ndarray, lr: float) -> LossBreakdown | None:
        tape = Tape(self.registry)
        controller = None
        solver_for: SolverSelector = fixed_tolerance(self.config.tolerance.value)
        if self.bundle.gates is not None:
            controller = GateController(self.bundle.gates, tape, rng=self.streams.generator("train.gates"))
            solver_for = controller
        try:
            breakdown = self._loss(indices, tape, solver_for)
        except LayerSolveException as err:
            self.session.skip_batch(epoch, batch, err.title)
            return None
        flow = breakdown.flow
        objective = breakdown.total
        if controller is not None:
            samples = controller.attach_stats(flow.stats)
            if self.session.alpha is None:
                self.session.alpha = calibrate_alpha(objective.item(), [gate.reward for gate in samples])
            objective, _ = gated_objective(breakdown.total, samples, self.session.alpha, self.baseline)
            self.session.record_gates(
                [
                    GateRecord(
                        epoch=epoch,
                        batch=batch,
                        layer=gate.layer,
                        mu=gate.mu,
                        sigma=gate.sigma,
                        log10_tolerance=gate.log10_tolerance,
                        tolerance=gate.tolerance,
                        nfe=gate.nfe,
                    )
                    for gate in samples
                ]
            )
        self.session.record_solves(
            [
                SolveRecord(
                    epoch=epoch,
                    batch=batch,
                    layer=layer,
                    nfe=stats.nfe,
                    accepted_steps=stats.accepted_steps,
                    rejected_steps=stats.rejected_steps,
                    tolerance=tolerance,
                )
                for layer, (stats, tolerance) in enumerate(zip(flow.stats, flow.tolerances))
            ]
        )
        grads = backward(tape, objective)
        self.registry.assign(adam_step(self.registry.flat, grads, self.adam, lr, self.registry, epoch, batch))
        return breakdown

    def evaluate(self, tolerance: float | None = None) -> EvaluationResult:
        return evaluate(
            self.bundle,
            self.registry,
            self.data.test_x,
            self.data.test_y,
            tolerance=self.config.tolerance.eval_value if tolerance is None else tolerance,
            batch_size=self.config.eval_batch_size,
            streams=self.streams,
        )

    def run_epoch(self, epoch: int) -> EpochMetrics:
        started = time.perf_counter()
        lr = self.config.lr_at(epoch)
        batches = minibatches(len(self.data.train_x), self.config.batch_size, self.streams.generator("train.order"))
        nlls, losses = [], []
        for batch, indices in enumerate(batches):
            breakdown = self.train_batch(epoch, batch, indices, lr)
            if breakdown is not None:
                nlls.append(breakdown.nll_value)
                losses.append(breakdown.total.item())
        self.session.check_skips(epoch, len(batches))
        result = self.evaluate()
        metrics = EpochMetrics(
            epoch=epoch,
            train_nll=float(np.mean(nlls)) if nlls else math.nan,
            test_nll=result.nll,
            test_err=result.err,
            mean_nfe=self.session.mean_nfe(epoch),
            lr=lr,
            dim=self.data.dim,
            test_marginal_nll=result.marginal_nll,
            train_loss=float(np.mean(losses)) if losses else math.nan,
            skipped_batches=self.session.skipped.get(epoch, 0),
            wall_time=time.perf_counter() - started,
        )
        self.session.complete_epoch(metrics)
        return metrics

    def run(self) -> TrainingSession:
        for epoch in range(1, self.config.epochs + 1):
            self.run_epoch(epoch)
        self.session.finish()
        return self.session

    def checkpoint(self) -> Checkpoint:
        return make_checkpoint(self.config, self.registry, self.data.class_counts)


@dataclass
class LatentOdeTrainer:
    config: TrainConfig
    model: LatentOdeModel
    registry: ParameterRegistry
    train: SpiralBatch
    test: SpiralBatch
    future_times: np.ndarray
    future_truth: np.ndarray
    session: TrainingSession
    streams: SeedStream
    adam: AdamState = field(init=False)
    best_loss: float = field(init=False, default=math.inf)
    stale_epochs: int = field(init=False, default=0)

    def __post_init__(self):
        self.adam = AdamState.zeros(self.registry.size)

    @classmethod
    def create(
        cls,
        config: TrainConfig,
        train: SpiralBatch,
        test: SpiralBatch,
        future_times: np.ndarray,
        future_truth: np.ndarray,
        run_dir: str = "",
    ) -> LatentOdeTrainer:
        streams = SeedStream(config.seed)
        registry = ParameterRegistry()
        model = build_latentode(config, registry, streams.generator("init"))
        return cls(
            config=config,
            model=model,
            registry=registry,
            train=train,
            test=test,
            future_times=np.asarray(future_times),
            future_truth=np.asarray(future_truth),
            session=TrainingSession(config=config, run_dir=run_dir),
            streams=streams,
        )

    @property
    def solver(self) -> SolverConfig:
        tolerance = self.config.tolerance.value
        return SolverConfig(rtol=tolerance, atol=tolerance, max_steps=self.config.model.max_steps)

    @property
    def eval_solver(self) -> SolverConfig:
        return self.solver.with_tolerance(self.config.tolerance.eval_value)

    def train_batch(self, epoch: int, batch: int, indices: np.ndarray, lr: float):
        tape = Tape(self.registry)
        try:
            breakdown = elbo(
                self.model,
                self.train.take(indices),
                tape,
                beta_sup=self.config.beta_sup,
                rng=self.streams.generator("train.posterior"),
                solver=self.solver,
            )
        except SolverException as err:
            self.session.skip_batch(epoch, batch, err.title)
            return None
        stats = breakdown.stats
        self.session.record_solves(
            [
                SolveRecord(
                    epoch=epoch,
                    batch=batch,
                    layer=0,
                    nfe=stats.nfe,
                    accepted_steps=stats.accepted_steps,
                    rejected_steps=stats.rejected_steps,
                    tolerance=self.solver.rtol,
                )
            ]
        )
        grads = backward(tape, breakdown.loss)
        self.registry.assign(adam_step(self.registry.flat, grads, self.adam, lr, self.registry, epoch, batch))
        return breakdown

    def evaluate(self) -> dict:
        tape = Tape(self.registry, recording=False)
        breakdown = elbo(self.model, self.test, tape, beta_sup=self.config.beta_sup, solver=self.eval_solver)
        result = extrapolate(self.model, self.test, self.future_times, tape, self.future_truth, self.eval_solver)
        err = math.nan
        if self.model.partitioned:
            _, directions = predict_labels(self.model, self.test, tape)
            err = float(np.mean(directions != self.test.direction_labels()))
        return {
            "nll": (breakdown.kl - breakdown.recon).item(),
            "err": err,
            "mse": result.mse,
            "conditioned_mse": math.nan if result.conditioned_mse is None else result.conditioned_mse,
        }

    def run_epoch(self, epoch: int) -> EpochMetrics:
        started = time.perf_counter()
        lr = self.config.lr_at(epoch)
        batches = minibatches(self.train.size, self.config.batch_size, self.streams.generator("train.order"))
        nlls, losses = [], []
        for batch, indices in enumerate(batches):
            breakdown = self.train_batch(epoch, batch, indices, lr)
            if breakdown is not None:
                nlls.append((breakdown.kl - breakdown.recon).item())
                losses.append(breakdown.loss.item())
        self.session.check_skips(epoch, len(batches))
        result = self.evaluate()
        metrics = EpochMetrics(
            epoch=epoch,
            train_nll=float(np.mean(nlls)) if nlls else math.nan,
            test_nll=result["nll"],
            test_err=result["err"],
            mean_nfe=self.session.mean_nfe(epoch),
            lr=lr,
            dim=2,
            train_loss=float(np.mean(losses)) if losses else math.nan,
            test_mse=result["mse"],
            test_mse_conditioned=result["conditioned_mse"],
            skipped_batches=self.session.skipped.get(epoch, 0),
            wall_time=time.perf_counter() - started,
        )
        self.session.complete_epoch(metrics)
        self._track(metrics.train_loss)
        return metrics

    def _track(self, loss: float) -> None:
        if loss < self.best_loss:
            self.best_loss, self.stale_epochs = loss, 0
        else:
            self.stale_epochs += 1

    @property
    def should_stop(self) -> bool:
        patience = self.config.early_stop_patience
        return patience is not None and self.stale_epochs >= patience

    def run(self) -> TrainingSession:
        for epoch in range(1, self.config.epochs + 1):
            self.run_epoch(epoch)
            if self.should_stop:
                break
        self.session.finish()
        return self.session

    def checkpoint(self) -> Checkpoint:
        return make_checkpoint(self.config, self.registry)


def _require_task(config: TrainConfig, task: str) -> None:
    if config.task != task:
        raise TrainConfigException(field="task", value=config.task)


def train_density(config: TrainConfig, data: FlowDataset) -> FlowTrainer:
    _require_task(config, "density")
    trainer = FlowTrainer.create(config, data)
    trainer.run()
    return trainer


def train_infocnf(config: TrainConfig, data: FlowDataset) -> FlowTrainer:
    _require_task(config, "infocnf")
    trainer = FlowTrainer.create(config, data)
    trainer.run()
    return trainer


def train_ccnf(config: TrainConfig, data: FlowDataset) -> FlowTrainer:
    _require_task(config, "ccnf")
    trainer = FlowTrainer.create(config, data)
    trainer.run()
    return trainer


def train_latentode(
    config: TrainConfig,
    train: SpiralBatch,
    test: SpiralBatch,
    future_times: np.ndarray,
    future_truth: np.ndarray,
) -> LatentOdeTrainer:
    _require_task(config, "latentode")
    trainer = LatentOdeTrainer.create(config, train, test, future_times, future_truth)
    trainer.run()
    return trainer


def make_checkpoint(config: TrainConfig, registry: ParameterRegistry, class_counts: tuple[int, ...] = ()) -> Checkpoint:
    return Checkpoint(
        task=config.task,
        config=config.to_dict(),
        parameters=registry.to_manifest(),
        flat=registry.flat,
        architecture=architecture(config, registry, class_counts),
        format_version=CHECKPOINT_FORMAT_VERSION,
    )


def restore_parameters(checkpoint: Checkpoint, registry: ParameterRegistry) -> None:
    """Load checkpoint values into a freshly built registry with the same layout."""
    expected = registry.to_manifest()
    if expected != checkpoint.parameters:
        raise CheckpointLayoutException(detail="parameter names, shapes or offsets differ from the rebuilt model")
    registry.assign(checkpoint.flat)


def restore_flow(config: TrainConfig, checkpoint: Checkpoint) -> tuple[FlowBundle, ParameterRegistry]:
    registry = ParameterRegistry()
    class_counts = tuple(checkpoint.architecture.get("class_counts", ()))
    bundle = build_flow(config, registry, SeedStream(config.seed).generator("init"), class_counts)
    restore_parameters(checkpoint, registry)
    return bundle, registry


def restore_latentode(config: TrainConfig, checkpoint: Checkpoint) -> tuple[LatentOdeModel, ParameterRegistry]:
    registry = ParameterRegistry()
    model = build_latentode(config, registry, SeedStream(config.seed).generator("init"))
    restore_parameters(checkpoint, registry)
    return model, registry
