import math

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from pydantic import Field

from src.domain.diffcore.tape import Tape
from src.domain.latentode.service import extrapolate
from src.domain.runs.entities import RunManifest
from src.domain.synthdata.seeds import SeedStream
from src.domain.train.datasets import flow_dataset, spiral_data
from src.domain.train.entities import TrainingSession
from src.domain.train.exceptions import TrainException, UnsupportedModelException
from src.domain.train.service import (
    CHECKPOINT_FORMAT_VERSION,
    FlowTrainer,
    LatentOdeTrainer,
    batch_size_sensitivity,
    evaluate,
    model_log_density,
    normalization_grid,
    restore_flow,
    restore_latentode,
    riemann_normalization,
)
from src.domain.train.values import EvaluationResult, NormalizationResult, TrainConfig
from src.infrastructure.logger_adapter.logger import init_logger
from src.infrastructure.storage.provenance import git_describe
from src.infrastructure.storage.uows.run_uow import RunUnitOfWork
from src.logic.commands.base import BaseCommand, CommandHandler
from src.logic.dto.mappers.config_mappers import train_config_mapper
from src.logic.dto.mappers.run_mappers import session_to_train_result_dto_mapper
from src.logic.dto.run_dto import EvaluationDTO, TrainResultDTO
from src.logic.events.training_events import GATES_TABLE, METRICS_TABLE, SOLVES_TABLE
from src.logic.exceptions.run_exceptions import (
    CheckpointVersionMismatchLogicException,
    InvalidEvaluationModeLogicException,
)

logger = init_logger(__name__)

DENSITY_TABLE = "density_1d.csv"
PREDICTIONS_TABLE = "predictions.csv"
EVAL_TABLE = "eval.csv"
SENSITIVITY_TABLE = "batch_sensitivity.csv"
NORMALIZATION_REPORT = "normalization.json"

DENSITY_GRID = (-8.0, 8.0, 1e-3)
PREDICTION_COLUMNS = ("curve", "step", "t", "x", "y", "x_true", "y_true")
EVAL_COLUMNS = (
    "mode",
    "tolerance",
    "batch_size",
    "test_nll",
    "test_bpd",
    "test_err",
    "mean_nfe",
    "test_marginal_nll",
    "test_mse",
    "test_mse_conditioned",
)


def parse_evaluation_mode(mode: str) -> tuple[str, float | None]:
    """``learned``, ``fixed`` or ``fixed:<tolerance>``."""
    if mode == "learned":
        return "learned", None
    kind, _, value = mode.partition(":")
    if kind != "fixed":
        raise InvalidEvaluationModeLogicException(mode=mode)
    if not value:
        return "fixed", 1e-5
    try:
        tolerance = float(value)
    except ValueError:
        raise InvalidEvaluationModeLogicException(mode=mode)
    if not math.isfinite(tolerance) or tolerance <= 0:
        raise InvalidEvaluationModeLogicException(mode=mode)
    return "fixed", tolerance


class TrainCommand(BaseCommand):
    config: dict
    out: str


@dataclass(frozen=True)
class TrainCommandHandler(CommandHandler[TrainCommand, TrainResultDTO]):
    uow: RunUnitOfWork

    async def handle(self, command: TrainCommand) -> TrainResultDTO:
        config = train_config_mapper(command.config)
        logger.debug(f"{self.__class__.__name__}: {config.task} seed={config.seed} -> {command.out}")
        trainer = self._trainer(config, command.out)

        async with self.uow.at(command.out):
            manifest = RunManifest(
                command="train", config=config.to_dict(), seed=config.seed, git_describe=git_describe()
            )
            self.uow.manifests.add(manifest)
            await self.uow.commit()

        try:
            await self._train(trainer, config)
        except TrainException as err:
            await self.mediator.publish(trainer.session.pull_events())
            logger.error(f"{config.task} run in {command.out} aborted: {err.title}")
            async with self.uow.at(command.out):
                manifest.summary.update({"status": "aborted", "error": err.title, **trainer.session.to_dict()})
                self._record_telemetry(manifest)
                self.uow.manifests.update(manifest)
                await self.uow.commit()
            raise

        async with self.uow.at(command.out):
            checkpoint = trainer.checkpoint()
            manifest.add_output("checkpoint", str(self.uow.checkpoints.add(checkpoint)))
            self._record_telemetry(manifest)
            normalization = None
            if isinstance(trainer, FlowTrainer) and config.dataset == "mix1d":
                normalization = self._write_density(trainer, config, manifest).to_dict()
            elif isinstance(trainer, LatentOdeTrainer):
                self._write_predictions(trainer, manifest)
            summary = {
                "status": "completed",
                "architecture": checkpoint.architecture,
                "final_metrics": trainer.session.last.to_row() if trainer.session.last else {},
                **trainer.session.to_dict(),
            }
            if "conditioning_parameters" in checkpoint.architecture:
                summary["conditioning_parameters"] = checkpoint.architecture["conditioning_parameters"]
            if normalization is not None:
                summary["normalization"] = normalization
            manifest.finish(summary)
            self.uow.manifests.update(manifest)
            await self.uow.commit()
        return session_to_train_result_dto_mapper(trainer.session, manifest, normalization)

    @staticmethod
    def _trainer(config: TrainConfig, run_dir: str) -> FlowTrainer | LatentOdeTrainer:
        if config.task == "latentode":
            data = spiral_data(config)
            future_times, future_truth = data.future()
            return LatentOdeTrainer.create(
                config, data.train_batch, data.test_batch, future_times, future_truth, run_dir=run_dir
            )
        return FlowTrainer.create(config, flow_dataset(config), run_dir=run_dir)

    async def _train(self, trainer: FlowTrainer | LatentOdeTrainer, config: TrainConfig) -> None:
        for epoch in range(1, config.epochs + 1):
            trainer.run_epoch(epoch)
            await self.mediator.publish(trainer.session.pull_events())
            if isinstance(trainer, LatentOdeTrainer) and trainer.should_stop:
                logger.info(f"early stop after epoch {epoch}: no training-loss improvement")
                break
        trainer.session.finish()
        await self.mediator.publish(trainer.session.pull_events())

    def _record_telemetry(self, manifest: RunManifest) -> None:
        for kind, name in (("metrics", METRICS_TABLE), ("solves", SOLVES_TABLE), ("gates", GATES_TABLE)):
            if self.uow.tables.exists(name):
                manifest.add_output(kind, str(self.uow.tables.path(name)))

    def _write_density(self, trainer: FlowTrainer, config: TrainConfig, manifest: RunManifest) -> NormalizationResult:
        """Exact and model log-density on the normalization grid, and the Riemann area of the model."""
        lo, hi, step = DENSITY_GRID
        grid = normalization_grid(lo, hi, step)
        tolerance = config.tolerance.eval_value
        model = model_log_density(trainer.bundle, trainer.registry, grid, tolerance, streams=trainer.streams)
        exact = config.data.mixture.log_density(grid)
        values = np.column_stack([grid, exact, model])
        path = self.uow.tables.write_array(DENSITY_TABLE, ("x", "exact", "model"), values)
        manifest.add_output("density_1d", str(path))
        result = NormalizationResult(
            area=float(np.sum(np.exp(model)) * step), lo=lo, hi=hi, step=step, tolerance=tolerance
        )
        logger.info(f"normalization on [{lo:g}, {hi:g}]: area={result.area:.6f} (|area - 1|={result.error:.2e})")
        return result

    def _write_predictions(self, trainer: LatentOdeTrainer, manifest: RunManifest) -> None:
        tape = Tape(trainer.registry, recording=False)
        result = extrapolate(
            trainer.model, trainer.test, trainer.future_times, tape, trainer.future_truth, trainer.eval_solver
        )
        curves, steps = result.predictions.shape[:2]
        values = np.column_stack(
            [
                np.repeat(np.arange(curves), steps),
                np.tile(np.arange(steps), curves),
                np.tile(trainer.future_times, curves),
                result.predictions.reshape(-1, 2),
                trainer.future_truth.reshape(-1, 2),
            ]
        )
        path = self.uow.tables.write_array(PREDICTIONS_TABLE, PREDICTION_COLUMNS, values)
        manifest.add_output("predictions", str(path))


class EvaluateCommand(BaseCommand):
    checkpoint: str
    mode: str = "fixed:1e-5"
    batch_size: int = Field(default=1000, gt=0)
    out: str | None = None
    normalization: bool = False


@dataclass(frozen=True)
class EvaluateCommandHandler(CommandHandler[EvaluateCommand, EvaluationDTO]):
    uow: RunUnitOfWork

    async def handle(self, command: EvaluateCommand) -> EvaluationDTO:
        mode, tolerance = parse_evaluation_mode(command.mode)
        checkpoint_path = Path(command.checkpoint)
        logger.debug(f"{self.__class__.__name__}: {checkpoint_path} mode={command.mode}")

        async with self.uow.at(checkpoint_path.parent):
            manifest = self.uow.checkpoints.read_manifest(checkpoint_path.name)
            if manifest["format_version"] != CHECKPOINT_FORMAT_VERSION:
                raise CheckpointVersionMismatchLogicException(
                    path=str(self.uow.root / checkpoint_path.name),
                    found=manifest["format_version"],
                    expected=CHECKPOINT_FORMAT_VERSION,
                )
            checkpoint = self.uow.checkpoints.load(checkpoint_path.name)
        config = train_config_mapper(checkpoint.config)

        normalization = None
        if config.task == "latentode":
            if mode != "fixed":
                raise UnsupportedModelException(detail="latent ODE checkpoints evaluate at a fixed tolerance only")
            rows = [self._evaluate_latentode(config, checkpoint, tolerance)]
        else:
            data = flow_dataset(config)
            bundle, registry = restore_flow(config, checkpoint)
            streams = SeedStream(config.seed)
            if mode == "learned":
                results = batch_size_sensitivity(bundle, registry, data.test_x, data.test_y, streams=streams)
            else:
                results = [
                    evaluate(
                        bundle, registry, data.test_x, data.test_y, "fixed", tolerance, command.batch_size, streams
                    )
                ]
            rows = [self._row(result) for result in results]
            if command.normalization:
                normalization = riemann_normalization(
                    bundle, registry, tolerance=tolerance or config.tolerance.eval_value, streams=streams
                ).to_dict()

        for row in rows:
            logger.info(
                f"eval {row['mode']} tolerance={row['tolerance']} batch={row['batch_size']}: "
                f"nll={row['test_nll']:.6f} err={row['test_err']:.4f} mean_nfe={row['mean_nfe']:.1f}"
            )
        out = command.out if command.out is not None else checkpoint_path.parent
        outputs = {}
        async with self.uow.at(out):
            outputs["eval"] = str(self.uow.tables.append(EVAL_TABLE, EVAL_COLUMNS, rows))
            if mode == "learned":
                outputs["batch_sensitivity"] = str(self.uow.tables.write(SENSITIVITY_TABLE, EVAL_COLUMNS, rows))
            if normalization is not None:
                outputs["normalization"] = str(self.uow.reports.write(NORMALIZATION_REPORT, normalization))
            await self.uow.commit()
        return EvaluationDTO(
            checkpoint=str(checkpoint_path), mode=command.mode, rows=rows, outputs=outputs, normalization=normalization
        )

    @staticmethod
    def _row(result: EvaluationResult) -> dict:
        return {**result.to_row(), "test_mse": math.nan, "test_mse_conditioned": math.nan}

    @staticmethod
    def _evaluate_latentode(config: TrainConfig, checkpoint, tolerance: float) -> dict:
        config = replace(config, tolerance=replace(config.tolerance, eval_value=tolerance))
        model, registry = restore_latentode(config, checkpoint)
        data = spiral_data(config)
        future_times, future_truth = data.future()
        trainer = LatentOdeTrainer(
            config=config,
            model=model,
            registry=registry,
            train=data.train_batch,
            test=data.test_batch,
            future_times=np.asarray(future_times),
            future_truth=np.asarray(future_truth),
            session=TrainingSession(config=config),
            streams=SeedStream(config.seed),
        )
        result = trainer.evaluate()
        return {
            "mode": "fixed",
            "tolerance": tolerance,
            "batch_size": trainer.test.size,
            "test_nll": result["nll"],
            "test_bpd": result["nll"] / (2 * math.log(2.0)),
            "test_err": result["err"],
            "mean_nfe": math.nan,
            "test_marginal_nll": math.nan,
            "test_mse": result["mse"],
            "test_mse_conditioned": result["conditioned_mse"],
        }
