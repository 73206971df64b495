import math

from collections import defaultdict
from dataclasses import dataclass
from typing import Literal

import numpy as np

from src.infrastructure.logger_adapter.logger import init_logger
from src.infrastructure.plots.renderer import (
    render_curves,
    render_density_1d,
    render_spiral_trajectories,
    render_tolerance_histogram,
)
from src.infrastructure.storage.exceptions import ArtifactNotFoundException
from src.infrastructure.storage.uows.run_uow import RunUnitOfWork
from src.logic.commands.base import BaseCommand, CommandHandler
from src.logic.commands.train_commands import DENSITY_TABLE, PREDICTIONS_TABLE
from src.logic.dto.run_dto import ReportDTO
from src.logic.events.training_events import GATES_TABLE, METRICS_TABLE
from src.logic.exceptions.run_exceptions import (
    MissingArtifactLogicException,
    RunNotFoundLogicException,
    UnknownPlotLogicException,
)

logger = init_logger(__name__)

Plot = Literal["nll_curve", "nfe_curve", "tol_hist", "density_1d", "spiral_traj"]
PLOT_SOURCES: dict[str, str] = {
    "nll_curve": METRICS_TABLE,
    "nfe_curve": METRICS_TABLE,
    "tol_hist": GATES_TABLE,
    "density_1d": DENSITY_TABLE,
    "spiral_traj": PREDICTIONS_TABLE,
}
SUMMARY_TABLE = "summary.csv"
SUMMARY_COLUMNS = ("metric", "final", "best", "mean")
SPIRAL_CURVES = 4


def _column(rows: list[dict], name: str) -> list[float]:
    return [float(row[name]) if row.get(name) not in (None, "") else math.nan for row in rows]


class ReportCommand(BaseCommand):
    run: str
    plots: list[str] | None = None


@dataclass(frozen=True)
class ReportCommandHandler(CommandHandler[ReportCommand, ReportDTO]):
    """Plots and the summary table come from the run's CSV files only."""

    uow: RunUnitOfWork

    async def handle(self, command: ReportCommand) -> ReportDTO:
        for plot in command.plots or ():
            if plot not in PLOT_SOURCES:
                raise UnknownPlotLogicException(plot=plot)
        async with self.uow.at(command.run):
            if not self.uow.root.is_dir():
                raise RunNotFoundLogicException(path=str(self.uow.root))
            plots = command.plots or [
                plot for plot, source in PLOT_SOURCES.items() if self.uow.tables.exists(source)
            ]
            logger.debug(f"{self.__class__.__name__}: {self.uow.root} plots={plots}")
            metrics = self._read(METRICS_TABLE)
            rendered, series = {}, {}
            for plot in plots:
                path, values = getattr(self, f"_plot_{plot}")(metrics)
                rendered[plot], series[plot] = str(path), values
            summary = self._summary(metrics)
            self.uow.tables.write(SUMMARY_TABLE, SUMMARY_COLUMNS, summary)
            await self.uow.commit()
        return ReportDTO(run_dir=str(self.uow.root), plots=rendered, series=series, summary=summary)

    def _read(self, name: str) -> list[dict]:
        try:
            return self.uow.tables.read(name)
        except ArtifactNotFoundException as err:
            raise MissingArtifactLogicException(path=err.path)

    def _svg(self, plot: str):
        return self.uow.root / f"{plot}.svg"

    def _plot_nll_curve(self, metrics: list[dict]):
        epochs = _column(metrics, "epoch")
        values = {"train_nll": _column(metrics, "train_nll"), "test_nll": _column(metrics, "test_nll")}
        return render_curves(self._svg("nll_curve"), epochs, values, "epoch", "NLL (nats)", "Negative log-likelihood"), values

    def _plot_nfe_curve(self, metrics: list[dict]):
        epochs = _column(metrics, "epoch")
        values = {"mean_nfe": _column(metrics, "mean_nfe")}
        return render_curves(self._svg("nfe_curve"), epochs, values, "epoch", "mean NFE per solve", "Function evaluations"), values

    def _plot_tol_hist(self, metrics: list[dict]):
        by_layer: dict[int, list[float]] = defaultdict(list)
        for row in self._read(GATES_TABLE):
            by_layer[int(row["layer"])].append(float(row["log10_tolerance"]))
        values = {f"layer_{layer}": items for layer, items in sorted(by_layer.items())}
        return render_tolerance_histogram(self._svg("tol_hist"), by_layer), values

    def _plot_density_1d(self, metrics: list[dict]):
        rows = self._read(DENSITY_TABLE)
        x, exact, model = (np.asarray(_column(rows, name)) for name in ("x", "exact", "model"))
        values = {"x": x.tolist(), "exact": exact.tolist(), "model": model.tolist()}
        return render_density_1d(self._svg("density_1d"), x, exact, model), values

    def _plot_spiral_traj(self, metrics: list[dict]):
        predictions: dict[int, list] = defaultdict(list)
        truth: dict[int, list] = defaultdict(list)
        for row in self._read(PREDICTIONS_TABLE):
            curve = int(row["curve"])
            if curve >= SPIRAL_CURVES:
                continue
            predictions[curve].append((float(row["x"]), float(row["y"])))
            truth[curve].append((float(row["x_true"]), float(row["y_true"])))
        predicted = {curve: np.asarray(points) for curve, points in predictions.items()}
        observed = {curve: np.asarray(points) for curve, points in truth.items()}
        values = {f"curve_{curve}": points[:, 0].tolist() for curve, points in predicted.items()}
        return render_spiral_trajectories(self._svg("spiral_traj"), predicted, observed), values

    @staticmethod
    def _summary(metrics: list[dict]) -> list[dict]:
        rows = []
        for name in ("train_nll", "test_nll", "test_err", "mean_nfe", "test_mse", "test_mse_conditioned"):
            values = np.asarray(_column(metrics, name))
            if values.size == 0 or np.all(np.isnan(values)):
                continue
            rows.append(
                {
                    "metric": name,
                    "final": float(values[-1]),
                    "best": float(np.nanmin(values)),
                    "mean": float(np.nanmean(values)),
                }
            )
        return rows
