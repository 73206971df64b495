from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from pydantic import Field

from src.domain.runs.entities import RunManifest
from src.domain.synthdata.service import gen_1d_mixture, gen_2d_labeled, gen_spiral_corpora
from src.domain.synthdata.values import Labeled2dSpec, MixtureSpec, SpiralCorpusSpec
from src.infrastructure.logger_adapter.logger import init_logger
from src.infrastructure.storage.provenance import git_describe
from src.infrastructure.storage.uows.run_uow import RunUnitOfWork
from src.logic.commands.base import BaseCommand, CommandHandler
from src.logic.dto.run_dto import DatasetDTO

logger = init_logger(__name__)

SYSTEM_COLUMNS = ("curve", "a", "b", "direction", "window_start")
POINT_COLUMNS = ("curve", "step", "t", "x", "y")


class GenerateDataCommand(BaseCommand):
    dataset: Literal["mix1d", "labeled2d", "spirals"]
    seed: int = 0
    out: str
    n_train: int | None = Field(default=None, gt=0)
    n_test: int | None = Field(default=None, gt=0)
    samples_per_class: int | None = Field(default=None, gt=0)
    n_curves: int | None = Field(default=None, gt=0)
    test_curves: int | None = Field(default=None, gt=0)
    noise: float | None = Field(default=None, ge=0)


def _point_rows(points: np.ndarray, times: np.ndarray) -> np.ndarray:
    """(curve, step, t, x, y) rows for a (curves, steps, 2) array; ``times`` is (curves, steps)."""
    curves, steps = points.shape[:2]
    curve = np.repeat(np.arange(curves), steps)
    step = np.tile(np.arange(steps), curves)
    return np.column_stack([curve, step, times.ravel(), points.reshape(-1, 2)])


@dataclass(frozen=True)
class GenerateDataCommandHandler(CommandHandler[GenerateDataCommand, DatasetDTO]):
    uow: RunUnitOfWork

    async def handle(self, command: GenerateDataCommand) -> DatasetDTO:
        logger.debug(f"{self.__class__.__name__}: {command.dataset} seed={command.seed} -> {command.out}")
        async with self.uow.at(command.out):
            manifest = RunManifest(
                command="gen-data",
                config=command.model_dump(exclude_none=True),
                seed=command.seed,
                git_describe=git_describe(),
            )
            self.uow.manifests.add(manifest)
            writer = getattr(self, f"_write_{command.dataset}")
            summary = writer(command, manifest)
            manifest.finish({"dataset": command.dataset, **summary})
            self.uow.manifests.update(manifest)
            await self.uow.commit()
        logger.debug(f"{self.__class__.__name__}: wrote {sorted(manifest.outputs)}")
        return DatasetDTO(
            dataset=command.dataset, run_dir=str(self.uow.root), files=dict(manifest.outputs), summary=summary
        )

    def _write_mix1d(self, command: GenerateDataCommand, manifest: RunManifest) -> dict:
        spec = MixtureSpec()
        sizes = {"train": command.n_train or 2000, "test": command.n_test or 1000}
        for split, n in sizes.items():
            samples, _ = gen_1d_mixture(spec, n, command.seed, split)
            path = self.uow.tables.write_array(f"{split}.csv", ("x",), samples)
            manifest.add_output(split, str(path))
        return {"sizes": sizes, "mixture": {"weights": spec.weights, "means": spec.means, "stds": spec.stds}}

    def _write_labeled2d(self, command: GenerateDataCommand, manifest: RunManifest) -> dict:
        spec = Labeled2dSpec()
        if command.samples_per_class:
            spec = replace(spec, samples_per_class=command.samples_per_class)
        test_spec = replace(spec, samples_per_class=max(1, (command.n_test or 1000) // spec.num_classes))
        for split, split_spec in (("train", spec), ("test", test_spec)):
            points, labels, _ = gen_2d_labeled(split_spec, command.seed, split)
            path = self.uow.tables.write_array(
                f"{split}.csv", ("x0", "x1", "label"), np.column_stack([points, labels])
            )
            manifest.add_output(split, str(path))
        return {
            "classes": spec.num_classes,
            "samples_per_class": {"train": spec.samples_per_class, "test": test_spec.samples_per_class},
        }

    def _write_spirals(self, command: GenerateDataCommand, manifest: RunManifest) -> dict:
        spec = SpiralCorpusSpec()
        overrides = {"n_curves": command.n_curves, "noise": command.noise}
        spec = replace(spec, **{key: value for key, value in overrides.items() if value is not None})
        test_curves = command.test_curves or 200
        summary = {"n_curves": spec.n_curves, "test_curves": test_curves}
        for split, corpus in zip(("train", "test"), gen_spiral_corpora(spec, test_curves, command.seed)):
            systems = [
                {
                    "curve": index,
                    "a": system.a,
                    "b": system.b,
                    "direction": system.direction,
                    "window_start": int(corpus.window_starts[index]),
                }
                for index, system in enumerate(corpus.systems)
            ]
            manifest.add_output(f"{split}_systems", str(self.uow.tables.write(f"{split}_systems.csv", SYSTEM_COLUMNS, systems)))
            window_times = np.stack([corpus.window_times(index) for index in range(len(corpus))])
            curve_times = np.broadcast_to(corpus.times, corpus.curves.shape[:2])
            windows = _point_rows(corpus.windows, window_times)
            curves = _point_rows(corpus.curves, curve_times)
            manifest.add_output(f"{split}_windows", str(self.uow.tables.write_array(f"{split}_windows.csv", POINT_COLUMNS, windows)))
            manifest.add_output(f"{split}_curves", str(self.uow.tables.write_array(f"{split}_curves.csv", POINT_COLUMNS, curves)))
            summary[f"{split}_directions"] = corpus.direction_counts
        return summary
