from __future__ import annotations

import math

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Literal

from src.domain.base.values import BaseCompositeValueObject
from src.domain.odesolve.exceptions import SolverConfigException

Method = Literal["dopri5", "rk4_fixed"]
GATE_TOLERANCE_MIN = 1e-8
GATE_TOLERANCE_MAX = 1e-1


@dataclass(frozen=True)
class SolverConfig(BaseCompositeValueObject):
    method: Method = "dopri5"
    rtol: float = 1e-5
    atol: float = 1e-5
    max_steps: int = 10000
    safety: float = 0.9
    min_factor: float = 0.2
    max_factor: float = 10.0
    fixed_step_count: int | None = None

    def validate(self):
        if self.method not in ("dopri5", "rk4_fixed"):
            raise SolverConfigException(field="method", value=self.method)
        for name in ("rtol", "atol"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise SolverConfigException(field=name, value=value)
        if self.max_steps <= 0:
            raise SolverConfigException(field="max_steps", value=self.max_steps)
        if not 0 < self.min_factor < 1 < self.max_factor:
            raise SolverConfigException(field="min_factor/max_factor", value=(self.min_factor, self.max_factor))
        if not 0 < self.safety <= 1:
            raise SolverConfigException(field="safety", value=self.safety)
        if self.fixed_step_count is not None and self.fixed_step_count <= 0:
            raise SolverConfigException(field="fixed_step_count", value=self.fixed_step_count)
        if self.method == "rk4_fixed" and self.fixed_step_count is None:
            raise SolverConfigException(field="fixed_step_count", value=None)

    @property
    def is_fixed_step(self) -> bool:
        return self.fixed_step_count is not None

    def with_tolerance(self, tolerance: float) -> SolverConfig:
        return replace(self, rtol=tolerance, atol=tolerance)

    def with_gate_tolerance(self, tolerance: float) -> SolverConfig:
        if not GATE_TOLERANCE_MIN <= tolerance <= GATE_TOLERANCE_MAX:
            raise SolverConfigException(field="gate tolerance", value=tolerance)
        return self.with_tolerance(tolerance)


@dataclass(frozen=True)
class SolveStats:
    nfe: int = 0
    accepted_steps: int = 0
    rejected_steps: int = 0

    def __add__(self, other: SolveStats) -> SolveStats:
        return SolveStats(
            nfe=self.nfe + other.nfe,
            accepted_steps=self.accepted_steps + other.accepted_steps,
            rejected_steps=self.rejected_steps + other.rejected_steps,
        )

    def to_dict(self) -> dict:
        return {"nfe": self.nfe, "accepted_steps": self.accepted_steps, "rejected_steps": self.rejected_steps}


@dataclass(frozen=True)
class ButcherTableau:
    a: tuple[tuple[float, ...], ...]
    c: tuple[float, ...]
    b: tuple[float, ...]
    b_hat: tuple[float, ...]

    @property
    def stages(self) -> int:
        return len(self.c)

    @property
    def error_weights(self) -> tuple[float, ...]:
        return tuple(high - low for high, low in zip(self.b, self.b_hat))


def _floats(rows) -> tuple:
    return tuple(tuple(float(item) for item in row) for row in rows)


_F = Fraction

DOPRI5_RATIONAL_A = (
    (),
    (_F(1, 5),),
    (_F(3, 40), _F(9, 40)),
    (_F(44, 45), _F(-56, 15), _F(32, 9)),
    (_F(19372, 6561), _F(-25360, 2187), _F(64448, 6561), _F(-212, 729)),
    (_F(9017, 3168), _F(-355, 33), _F(46732, 5247), _F(49, 176), _F(-5103, 18656)),
    (_F(35, 384), _F(0), _F(500, 1113), _F(125, 192), _F(-2187, 6784), _F(11, 84)),
)
DOPRI5_RATIONAL_C = (_F(0), _F(1, 5), _F(3, 10), _F(4, 5), _F(8, 9), _F(1), _F(1))

DOPRI5 = ButcherTableau(
    a=_floats(DOPRI5_RATIONAL_A),
    c=tuple(float(node) for node in DOPRI5_RATIONAL_C),
    b=(35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0),
    b_hat=(5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40),
)

RK4 = ButcherTableau(
    a=((), (0.5,), (0.0, 0.5), (0.0, 0.0, 1.0)),
    c=(0.0, 0.5, 0.5, 1.0),
    b=(1 / 6, 1 / 3, 1 / 3, 1 / 6),
    b_hat=(1 / 6, 1 / 3, 1 / 3, 1 / 6),
)
