"""Named verification oracles and the runner that turns them into a report.

An oracle is a zero-argument function returning an :class:`OracleOutcome`. Names are dotted,
``<area>.<check>``; training-scale checks live under the ``experiment.`` prefix and only run
when asked for.
"""

from __future__ import annotations

import math
import re
import time

from collections.abc import Callable
from dataclasses import dataclass, field

from src.domain.base.exceptions import DomainException
from src.infrastructure.logger_adapter.logger import init_logger

logger = init_logger(__name__)

EXPERIMENT_PREFIX = "experiment."

CRITERIA = (
    "normalization",
    "eval-tolerance-insensitivity",
    "nfe-tolerance-monotonicity",
    "gradient-fidelity",
    "solver-order",
    "hutchinson-unbiasedness",
    "partition-efficiency",
    "learned-tolerance-nfe",
    "reinforce-correctness",
    "spiral-extrapolation",
    "determinism-round-trip",
    "oracle-suite",
)


@dataclass(frozen=True)
class OracleOutcome:
    measured: float
    expected: float | str
    tolerance: float | str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class OracleReport:
    name: str
    measured: float
    expected: float | str
    tolerance: float | str
    passed: bool
    runtime: float
    criterion: str | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "criterion": self.criterion,
            "measured": None if isinstance(self.measured, float) and math.isnan(self.measured) else self.measured,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "runtime": self.runtime,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class Oracle:
    name: str
    run: Callable[[], OracleOutcome]
    criterion: str | None = None

    @property
    def is_experiment(self) -> bool:
        return self.name.startswith(EXPERIMENT_PREFIX)


@dataclass
class OracleRegistry:
    oracles: dict[str, Oracle] = field(default_factory=dict)

    def register(self, name: str, criterion: str | None = None):
        if criterion is not None and criterion not in CRITERIA:
            raise KeyError(criterion)

        def decorator(func: Callable[[], OracleOutcome]) -> Callable[[], OracleOutcome]:
            if name in self.oracles:
                raise KeyError(f"oracle {name} registered twice")
            self.oracles[name] = Oracle(name=name, run=func, criterion=criterion)
            return func

        return decorator

    def select(self, pattern: str | None = None, include_experiments: bool = False) -> list[Oracle]:
        matcher = re.compile(pattern) if pattern else None
        return [
            item
            for name, item in sorted(self.oracles.items())
            if (include_experiments or not item.is_experiment) and (matcher is None or matcher.search(name))
        ]


registry = OracleRegistry()
oracle = registry.register


def run_oracle(item: Oracle) -> OracleReport:
    """A raised exception is a failed check, never a crashed suite."""
    started = time.perf_counter()
    try:
        outcome = item.run()
    except (DomainException, ArithmeticError, ValueError) as err:
        title = getattr(err, "title", None) or repr(err)
        logger.error(f"{item.name}: raised {title}")
        outcome = OracleOutcome(measured=math.nan, expected="no exception", tolerance="-", passed=False, detail=title)
    runtime = time.perf_counter() - started
    level = "info" if outcome.passed else "warning"
    getattr(logger, level)(f"{item.name}: {'pass' if outcome.passed else 'FAIL'} ({runtime:.2f}s) {outcome.detail}")
    return OracleReport(
        name=item.name,
        measured=float(outcome.measured),
        expected=outcome.expected,
        tolerance=outcome.tolerance,
        passed=bool(outcome.passed),
        runtime=runtime,
        criterion=item.criterion,
        detail=outcome.detail,
    )


def criteria_summary(reports: list[OracleReport]) -> list[dict]:
    """One entry per acceptance criterion, with the oracles that cover it in this run."""
    summary = []
    for criterion in CRITERIA:
        covering = [item for item in reports if item.criterion == criterion]
        if criterion == "oracle-suite":
            covering = list(reports)
        summary.append(
            {
                "criterion": criterion,
                "oracles": [item.name for item in covering],
                "passed": bool(covering) and all(item.passed for item in covering),
                "covered": bool(covering),
            }
        )
    return summary
