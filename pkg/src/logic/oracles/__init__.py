from src.logic.oracles import (  # noqa: F401  registration side effects
    condition,
    diffcore,
    experiments,
    flow,
    latentode,
    solver,
    synthdata,
    tolgate,
    train,
)
from src.logic.oracles.registry import OracleReport, criteria_summary, registry, run_oracle


def run_oracles(pattern: str | None = None, include_experiments: bool = False) -> list[OracleReport]:
    return [run_oracle(item) for item in registry.select(pattern, include_experiments)]


__all__ = ["OracleReport", "criteria_summary", "registry", "run_oracles"]
