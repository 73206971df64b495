import asyncio

from pathlib import Path

import click
import orjson

from src.infrastructure.storage.converters import convert_to_json
from src.logic.commands.data_commands import GenerateDataCommand
from src.logic.commands.oracle_commands import RunOraclesCommand
from src.logic.commands.report_commands import PLOT_SOURCES, ReportCommand
from src.logic.commands.train_commands import EvaluateCommand, TrainCommand
from src.logic.mediator.base import Mediator
from src.logic.queries.run_queries import GetRunManifestQuery, GetRunTableQuery
from src.presentation.cli.dependencies import setup_container
from src.presentation.cli.exceptions import EXIT_CONFIG, EXIT_IO, CliExit, handle_errors
from src.presentation.cli.schemas import TrainConfigSchema


async def _dispatch(message, query: bool = False):
    container = setup_container()
    try:
        mediator = await container.get(Mediator)
        if query:
            return await mediator.handle_query(message)
        return (await mediator.handle_command(message))[0]
    finally:
        await container.close()


def run(message, query: bool = False):
    return asyncio.run(_dispatch(message, query))


def echo_json(data) -> None:
    click.echo(convert_to_json(data).decode("utf-8"))


def read_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        data = orjson.loads(path.read_bytes())
    except OSError as err:
        raise CliExit(f"cannot read config {path}: {err.strerror}", EXIT_IO)
    except orjson.JSONDecodeError as err:
        raise CliExit(f"config {path} is not valid JSON: {err}", EXIT_CONFIG)
    if not isinstance(data, dict):
        raise CliExit(f"config {path} must hold a JSON object", EXIT_CONFIG)
    return data


@click.group()
def cli():
    """Conditional continuous normalizing flows with learned solver tolerances."""


@cli.command("gen-data")
@click.option("--dataset", type=click.Choice(["mix1d", "labeled2d", "spirals"]), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, help="Run directory, relative to CONDFLOW_OUTPUT_ROOT.")
@click.option("--n-train", type=int)
@click.option("--n-test", type=int)
@click.option("--samples-per-class", type=int)
@click.option("--n-curves", type=int)
@click.option("--test-curves", type=int)
@click.option("--noise", type=float)
@handle_errors
def gen_data(**options):
    echo_json(run(GenerateDataCommand(**options)).to_dict())


@cli.command()
@click.option("--task", type=click.Choice(["density", "infocnf", "ccnf", "latentode"]))
@click.option("--config", "config_path", type=click.Path(path_type=Path), help="JSON training config.")
@click.option("--out", required=True)
@click.option("--tolerance-mode", type=click.Choice(["fixed", "gated"]))
@click.option("--seed", type=int)
@click.option("--epochs", type=int)
@handle_errors
def train(task, config_path, out, tolerance_mode, seed, epochs):
    data = read_config(config_path)
    overrides = {"task": task, "seed": seed, "epochs": epochs}
    data.update({key: value for key, value in overrides.items() if value is not None})
    if tolerance_mode is not None:
        data["tolerance"] = {**(data.get("tolerance") or {}), "mode": tolerance_mode}
    config = TrainConfigSchema.model_validate(data)
    echo_json(run(TrainCommand(config=config.to_config(), out=out)).to_dict())


@cli.command("eval")
@click.option("--checkpoint", required=True)
@click.option("--mode", default="fixed:1e-5", show_default=True, help="fixed:<tolerance> or learned.")
@click.option("--batch-size", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--out", help="Directory for eval.csv; defaults to the checkpoint's run directory.")
@click.option("--normalization", is_flag=True, help="Also integrate a 1D model density on [-8, 8].")
@handle_errors
def evaluate(checkpoint, mode, batch_size, out, normalization):
    command = EvaluateCommand(
        checkpoint=checkpoint, mode=mode, batch_size=batch_size, out=out, normalization=normalization
    )
    echo_json(run(command).to_dict())


@cli.command()
@click.option("--run", "run_dir", required=True)
@click.option(
    "--plots",
    multiple=True,
    type=click.Choice(sorted(PLOT_SOURCES)),
    help="Repeatable; defaults to every plot whose table exists.",
)
@handle_errors
def report(run_dir, plots):
    result = run(ReportCommand(run=run_dir, plots=list(plots) or None))
    echo_json({"run_dir": result.run_dir, "plots": result.plots, "summary": result.summary})


@cli.command()
@click.option("--filter", "pattern", help="Regular expression searched in oracle names.")
@click.option("--include-experiments", is_flag=True, help="Also run the training-scale experiments.")
@click.option("--out", default=".", show_default=True, help="Directory for oracles.json.")
@handle_errors
def oracles(pattern, include_experiments, out):
    result = run(RunOraclesCommand(filter=pattern, include_experiments=include_experiments, out=out))
    for item in result.reports:
        status = "pass" if item["passed"] else "FAIL"
        click.echo(f"{status:4} {item['name']:45} measured={item['measured']} expected={item['expected']}")
    click.echo(f"report: {result.report_path}")
    if not result.passed:
        raise CliExit(f"{len(result.failures)} oracle(s) failed: {', '.join(result.failures)}", EXIT_IO)


@cli.command()
def schema():
    """Print the JSON schema of training configs."""
    echo_json(TrainConfigSchema.model_json_schema())


@cli.command()
@click.option("--run", "run_dir", required=True)
@click.option("--table", help="Print one CSV table of the run instead of its manifest.")
@handle_errors
def show(run_dir, table):
    if table:
        echo_json(run(GetRunTableQuery(run=run_dir, table=table), query=True))
    else:
        echo_json(run(GetRunManifestQuery(run=run_dir), query=True).to_dict())


if __name__ == "__main__":
    cli()
