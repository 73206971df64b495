from __future__ import annotations

import math

import numpy as np

from src.domain.diffcore.tensor import Tensor, concat
from src.domain.odesolve.service import integrate, integrate_grid
from src.domain.odesolve.values import SolverConfig
from src.logic.oracles.registry import OracleOutcome, oracle


def _growth(y: Tensor, t: float) -> Tensor:
    return y


def _oscillator(y: Tensor, t: float) -> Tensor:
    return concat([y[..., 1:2], -y[..., 0:1]], axis=-1)


def _endpoint_error(cfg: SolverConfig) -> float:
    y, _ = integrate(_growth, Tensor(np.array([1.0])), 0.0, 1.0, cfg)
    return abs(float(y.value[0]) - math.e)


def _halving_ratio(method: str, steps: int) -> float:
    coarse = _endpoint_error(SolverConfig(method=method, fixed_step_count=steps))
    fine = _endpoint_error(SolverConfig(method=method, fixed_step_count=2 * steps))
    return coarse / fine


@oracle("solver.rk4_order", criterion="solver-order")
def rk4_order() -> OracleOutcome:
    ratio = _halving_ratio("rk4_fixed", 10)
    return OracleOutcome(measured=ratio, expected=16.0, tolerance="[12, 20]", passed=12.0 <= ratio <= 20.0)


@oracle("solver.dopri5_order", criterion="solver-order")
def dopri5_order() -> OracleOutcome:
    ratio = _halving_ratio("dopri5", 4)
    return OracleOutcome(measured=ratio, expected=32.0, tolerance="[24, 40]", passed=24.0 <= ratio <= 40.0)


@oracle("solver.oscillator_period")
def oscillator_period() -> OracleOutcome:
    y0 = np.array([1.0, 0.0])
    cfg = SolverConfig(rtol=1e-10, atol=1e-10, max_steps=100000)
    y, stats = integrate(_oscillator, Tensor(y0), 0.0, 2.0 * math.pi, cfg)
    error = float(np.max(np.abs(y.value - y0)))
    return OracleOutcome(
        measured=error, expected=0.0, tolerance=1e-8, passed=error <= 1e-8, detail=f"{stats.nfe} evaluations"
    )


@oracle("solver.tolerance_scaling", criterion="nfe-tolerance-monotonicity")
def tolerance_scaling() -> OracleOutcome:
    """Tighter tolerances cost more evaluations and land closer to the exact endpoint."""
    loose_error = _endpoint_error(SolverConfig(rtol=1e-3, atol=1e-3))
    tight_error = _endpoint_error(SolverConfig(rtol=1e-8, atol=1e-8))
    _, loose = integrate(_growth, Tensor(np.array([1.0])), 0.0, 1.0, SolverConfig(rtol=1e-3, atol=1e-3))
    _, tight = integrate(_growth, Tensor(np.array([1.0])), 0.0, 1.0, SolverConfig(rtol=1e-8, atol=1e-8))
    passed = tight.nfe > loose.nfe and tight_error < loose_error
    return OracleOutcome(
        measured=float(tight.nfe - loose.nfe),
        expected="> 0",
        tolerance="-",
        passed=passed,
        detail=f"nfe {loose.nfe} -> {tight.nfe}, error {loose_error:.2e} -> {tight_error:.2e}",
    )


@oracle("solver.grid_matches_endpoint")
def grid_matches_endpoint() -> OracleOutcome:
    times = np.linspace(0.0, 2.0, 9)
    cfg = SolverConfig(rtol=1e-9, atol=1e-9)
    states, _ = integrate_grid(_growth, Tensor(np.array([1.0])), times, cfg)
    values = np.array([float(state.value[0]) for state in states])
    error = float(np.max(np.abs(values - np.exp(times)) / np.exp(times)))
    return OracleOutcome(measured=error, expected=0.0, tolerance=1e-7, passed=error <= 1e-7)
