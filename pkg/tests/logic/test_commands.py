import math

from pathlib import Path

import orjson
import pytest

from src.domain.runs.exceptions import RunAlreadyExistsException
from src.domain.train.exceptions import TrainConfigException
from src.logic.commands.data_commands import GenerateDataCommand
from src.logic.commands.oracle_commands import RunOraclesCommand
from src.logic.commands.report_commands import ReportCommand
from src.logic.commands.train_commands import EvaluateCommand, TrainCommand, parse_evaluation_mode
from src.logic.exceptions.run_exceptions import (
    CheckpointVersionMismatchLogicException,
    InvalidEvaluationModeLogicException,
    MissingArtifactLogicException,
    RunNotFoundLogicException,
    UnknownPlotLogicException,
)
from src.logic.queries.run_queries import GetRunManifestQuery, GetRunTableQuery
from tests.conftest import tiny_config


async def execute(mediator, command):
    (result,) = await mediator.handle_command(command)
    return result


class TestGenerateData:
    async def test_mixture(self, mediator, tmp_path):
        result = await execute(mediator, GenerateDataCommand(dataset="mix1d", out="data", n_train=30, n_test=10))
        assert result.summary["sizes"] == {"train": 30, "test": 10}
        assert Path(result.files["train"]).is_file()
        assert (tmp_path / "data" / "manifest.json").is_file()

    async def test_labeled(self, mediator):
        result = await execute(
            mediator, GenerateDataCommand(dataset="labeled2d", out="data", samples_per_class=5, n_test=8)
        )
        assert result.summary["samples_per_class"] == {"train": 5, "test": 2}
        table = await mediator.handle_query(GetRunTableQuery(run="data", table="train"))
        assert len(table) == 20
        assert {row["label"] for row in table} == {0.0, 1.0, 2.0, 3.0}

    async def test_spirals(self, mediator):
        result = await execute(
            mediator, GenerateDataCommand(dataset="spirals", out="data", n_curves=6, test_curves=4, seed=2)
        )
        assert result.summary["train_directions"] == {"clockwise": 3, "counter_clockwise": 3}
        assert {"train_systems", "train_windows", "test_curves"} <= set(result.files)
        systems = await mediator.handle_query(GetRunTableQuery(run="data", table="test_systems.csv"))
        assert len(systems) == 4

    async def test_refuses_an_existing_run(self, mediator, tmp_path):
        command = GenerateDataCommand(dataset="mix1d", out="data", n_train=5, n_test=5)
        await execute(mediator, command)
        with pytest.raises(RunAlreadyExistsException):
            await execute(mediator, command)


class TestTrain:
    async def test_density_run(self, mediator, tmp_path):
        result = await execute(mediator, TrainCommand(config=tiny_config(), out="run"))
        run_dir = tmp_path / "run"
        assert result.epochs == 2
        assert {"checkpoint", "metrics", "solves", "density_1d"} <= set(result.outputs)
        assert (run_dir / "checkpoint.bin").is_file()
        assert result.normalization["error"] < 0.1

        detail = await mediator.handle_query(GetRunManifestQuery(run="run"))
        assert detail.command == "train"
        assert detail.summary["status"] == "completed"
        assert detail.finished_at is not None
        assert "metrics.csv" in detail.tables

        metrics = await mediator.handle_query(GetRunTableQuery(run="run", table="metrics"))
        assert [row["epoch"] for row in metrics] == [1, 2]

    async def test_gated_infocnf_writes_gates(self, mediator, tmp_path):
        config = tiny_config("infocnf", tolerance={"mode": "gated", "value": 1e-3})
        result = await execute(mediator, TrainCommand(config=config, out="run"))
        assert "gates" in result.outputs
        assert 0.0 <= result.final_metrics["test_err"] <= 1.0
        assert result.architecture["conditioning_parameters"] > 0
        gates = await mediator.handle_query(GetRunTableQuery(run="run", table="gates"))
        assert all(-8.0 <= row["log10_tolerance"] <= -1.0 for row in gates)

    async def test_latentode_writes_predictions(self, mediator):
        result = await execute(mediator, TrainCommand(config=tiny_config("latentode"), out="run"))
        assert "predictions" in result.outputs
        assert math.isfinite(result.final_metrics["test_mse"])

    async def test_invalid_config(self, mediator, tmp_path):
        with pytest.raises(TrainConfigException):
            await execute(mediator, TrainCommand(config=tiny_config(epochs=0), out="run"))
        assert not (tmp_path / "run").exists()


class TestEvaluate:
    @pytest.mark.parametrize(
        "mode, expected",
        [("learned", ("learned", None)), ("fixed", ("fixed", 1e-5)), ("fixed:1e-3", ("fixed", 1e-3))],
    )
    def test_parse_mode(self, mode, expected):
        assert parse_evaluation_mode(mode) == expected

    @pytest.mark.parametrize("mode", ["adaptive", "fixed:abc", "fixed:-1", "fixed:nan"])
    def test_bad_mode(self, mode):
        with pytest.raises(InvalidEvaluationModeLogicException):
            parse_evaluation_mode(mode)

    async def test_fixed_tolerance(self, mediator, tmp_path):
        trained = await execute(mediator, TrainCommand(config=tiny_config(epochs=1), out="run"))
        result = await execute(
            mediator,
            EvaluateCommand(checkpoint=trained.outputs["checkpoint"], mode="fixed:1e-4", normalization=True),
        )
        (row,) = result.rows
        assert row["tolerance"] == 1e-4
        assert math.isfinite(row["test_nll"])
        assert result.normalization["tolerance"] == 1e-4
        assert (tmp_path / "run" / "eval.csv").is_file()

    async def test_learned_tolerance(self, mediator, tmp_path):
        config = tiny_config("infocnf", epochs=1, tolerance={"mode": "gated", "value": 1e-3})
        trained = await execute(mediator, TrainCommand(config=config, out="run"))
        result = await execute(
            mediator,
            EvaluateCommand(checkpoint=trained.outputs["checkpoint"], mode="learned", out=str(tmp_path / "eval")),
        )
        assert [row["batch_size"] for row in result.rows] == [1, 256, 2048]
        assert all(row["tolerance"] == "learned" for row in result.rows)
        assert Path(result.outputs["batch_sensitivity"]).is_file()

    async def test_version_mismatch(self, mediator, tmp_path):
        trained = await execute(mediator, TrainCommand(config=tiny_config(epochs=1), out="run"))
        path = Path(trained.outputs["checkpoint"])
        manifest = orjson.loads(path.read_bytes())
        manifest["format_version"] = 99
        path.write_bytes(orjson.dumps(manifest))
        with pytest.raises(CheckpointVersionMismatchLogicException) as err:
            await execute(mediator, EvaluateCommand(checkpoint=str(path)))
        assert err.value.found == 99


class TestReport:
    async def test_plots_from_tables(self, mediator, tmp_path):
        await execute(mediator, TrainCommand(config=tiny_config(), out="run"))
        result = await execute(mediator, ReportCommand(run="run"))
        assert {"nll_curve", "nfe_curve", "density_1d"} <= set(result.plots)
        assert "tol_hist" not in result.plots
        assert all(Path(path).is_file() for path in result.plots.values())
        assert len(result.series["nll_curve"]["test_nll"]) == 2
        assert {row["metric"] for row in result.summary} >= {"train_nll", "test_nll", "mean_nfe"}
        assert (tmp_path / "run" / "summary.csv").is_file()

    async def test_missing_table(self, mediator):
        await execute(mediator, GenerateDataCommand(dataset="mix1d", out="data", n_train=5, n_test=5))
        with pytest.raises(MissingArtifactLogicException):
            await execute(mediator, ReportCommand(run="data", plots=["nll_curve"]))

    async def test_unknown_plot(self, mediator):
        with pytest.raises(UnknownPlotLogicException):
            await execute(mediator, ReportCommand(run="run", plots=["heatmap"]))

    async def test_missing_run(self, mediator):
        with pytest.raises(RunNotFoundLogicException):
            await execute(mediator, ReportCommand(run="absent"))


class TestQueries:
    async def test_missing_manifest(self, mediator):
        with pytest.raises(RunNotFoundLogicException):
            await mediator.handle_query(GetRunManifestQuery(run="absent"))

    async def test_missing_table(self, mediator):
        await execute(mediator, GenerateDataCommand(dataset="mix1d", out="data", n_train=5, n_test=5))
        with pytest.raises(MissingArtifactLogicException):
            await mediator.handle_query(GetRunTableQuery(run="data", table="metrics"))


class TestOracles:
    async def test_filtered_run_writes_a_report(self, mediator, tmp_path):
        result = await execute(mediator, RunOraclesCommand(filter=r"^synthdata\.mixture", out="oracles"))
        assert result.reports
        assert all(item["name"].startswith("synthdata.mixture") for item in result.reports)
        report = orjson.loads((tmp_path / "oracles" / "oracles.json").read_bytes())
        assert report["passed"] == result.passed
        assert {item["criterion"] for item in report["criteria"]} >= {"normalization", "oracle-suite"}

    async def test_without_out_nothing_is_written(self, mediator, tmp_path):
        result = await execute(mediator, RunOraclesCommand(filter="no-such-oracle"))
        assert result.reports == []
        assert result.report_path is None
        assert not (tmp_path / "oracles.json").exists()
