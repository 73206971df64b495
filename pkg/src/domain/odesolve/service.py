"""Explicit Runge-Kutta integration on the differentiation tape.

Every stage is built from recorded primitives, so gradients flow through the realized
sequence of accepted steps. Step-size control only reads plain values.
"""

from __future__ import annotations

import math

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from src.domain.diffcore.tensor import Tensor, as_tensor
from src.domain.odesolve.exceptions import InvalidIntervalException, NumericException, SolverDivergenceException
from src.domain.odesolve.values import DOPRI5, RK4, ButcherTableau, SolverConfig, SolveStats

Dynamics = Callable[[Tensor, float], Tensor]

ERROR_EXPONENT = -1.0 / 5.0


@dataclass
class CountedDynamics:
    f: Dynamics
    nfe: int = 0

    def __call__(self, y: Tensor, t: float) -> Tensor:
        self.nfe += 1
        dy = as_tensor(self.f(y, t))
        if not np.all(np.isfinite(dy.value)):
            raise NumericException(t=t)
        return dy


def error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray, atol: float, rtol: float) -> float:
    err, y0, y1 = (np.asarray(item, dtype=np.float64) for item in (err, y0, y1))
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean(np.square(err / scale))))


def next_step_size(h: float, err_norm: float, cfg: SolverConfig) -> float:
    if err_norm == 0.0:
        return h * cfg.max_factor
    factor = cfg.safety * err_norm**ERROR_EXPONENT
    return h * min(cfg.max_factor, max(cfg.min_factor, factor))


def initial_step_size(
    f: Dynamics,
    y0: Tensor,
    t0: float,
    t1: float,
    cfg: SolverConfig,
    f0: Tensor | None = None,
) -> float:
    """Starting step from the scaled state and derivative norms, refined by one Euler trial."""
    span = t1 - t0
    y0 = as_tensor(y0)
    f0 = as_tensor(f(y0, t0)) if f0 is None else f0
    scale = cfg.atol + np.abs(y0.value) * cfg.rtol
    d0 = float(np.sqrt(np.mean(np.square(y0.value / scale))))
    d1 = float(np.sqrt(np.mean(np.square(f0.value / scale))))
    if d1 == 0.0:
        return span / 100.0
    h0 = 1e-6 if d0 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    trial = Tensor(y0.value + h0 * f0.value)
    f1 = as_tensor(f(trial, t0 + h0))
    d2 = float(np.sqrt(np.mean(np.square((f1.value - f0.value) / scale)))) / h0
    peak = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if peak <= 1e-15 else (0.01 / peak) ** (1.0 / 5.0)
    return min(100.0 * h0, h1, span)


def _combine(y: Tensor, h: float, coefficients: Sequence[float], ks: Sequence[Tensor]) -> Tensor:
    acc = y
    for coefficient, k in zip(coefficients, ks):
        if coefficient != 0.0:
            acc = acc + k * (h * coefficient)
    return acc


def rk_step(
    f: Dynamics,
    y: Tensor,
    t: float,
    h: float,
    tableau: ButcherTableau,
    k1: Tensor,
) -> tuple[Tensor, list[Tensor]]:
    """One explicit step; returns the propagated state and every stage derivative."""
    ks = [k1]
    stage_input = y
    for index in range(1, tableau.stages):
        stage_input = _combine(y, h, tableau.a[index], ks)
        ks.append(f(stage_input, t + tableau.c[index] * h))
    if _is_fsal(tableau):
        return stage_input, ks
    return _combine(y, h, tableau.b, ks), ks


def _is_fsal(tableau: ButcherTableau) -> bool:
    return tableau.b[-1] == 0.0 and tuple(tableau.a[-1]) == tuple(tableau.b[:-1])


def _validate_times(times: Sequence[float]) -> tuple[float, ...]:
    grid = tuple(float(t) for t in times)
    if len(grid) < 2 or not all(math.isfinite(t) for t in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidIntervalException(times=grid)
    return grid


def integrate_grid(
    f: Dynamics,
    y0: Tensor,
    times: Sequence[float],
    cfg: SolverConfig,
) -> tuple[list[Tensor], SolveStats]:
    """States at every requested time from a single run; steps are clipped to land on the grid."""
    grid = _validate_times(times)
    y0 = as_tensor(y0)
    counted = CountedDynamics(f)
    if cfg.is_fixed_step:
        return _integrate_fixed(counted, y0, grid, cfg)
    return _integrate_adaptive(counted, y0, grid, cfg)


def integrate(f: Dynamics, y0: Tensor, t0: float, t1: float, cfg: SolverConfig) -> tuple[Tensor, SolveStats]:
    states, stats = integrate_grid(f, y0, (t0, t1), cfg)
    return states[-1], stats


def _integrate_fixed(
    f: CountedDynamics,
    y0: Tensor,
    grid: tuple[float, ...],
    cfg: SolverConfig,
) -> tuple[list[Tensor], SolveStats]:
    tableau = RK4 if cfg.method == "rk4_fixed" else DOPRI5
    fsal = _is_fsal(tableau)
    h_nominal = (grid[-1] - grid[0]) / cfg.fixed_step_count
    states, y, t = [y0], y0, grid[0]
    k1 = f(y, t)
    accepted = 0
    for target in grid[1:]:
        while t < target:
            remaining = target - t
            landing = h_nominal >= remaining - 1e-12 * max(1.0, abs(target))
            h = remaining if landing else h_nominal
            if accepted > 0 and not fsal:
                k1 = f(y, t)
            y, ks = rk_step(f, y, t, h, tableau, k1)
            t = target if landing else t + h
            k1 = ks[-1] if fsal else k1
            accepted += 1
        states.append(y)
    return states, SolveStats(nfe=f.nfe, accepted_steps=accepted, rejected_steps=0)


def _integrate_adaptive(
    f: CountedDynamics,
    y0: Tensor,
    grid: tuple[float, ...],
    cfg: SolverConfig,
) -> tuple[list[Tensor], SolveStats]:
    tableau = DOPRI5
    weights = tableau.error_weights
    states, y, t = [y0], y0, grid[0]
    k1 = f(y, t)
    h = initial_step_size(f, y, grid[0], grid[-1], cfg, f0=k1)
    accepted = rejected = 0
    for target in grid[1:]:
        while t < target:
            if accepted + rejected >= cfg.max_steps:
                raise SolverDivergenceException(
                    stats=SolveStats(nfe=f.nfe, accepted_steps=accepted, rejected_steps=rejected), t=t
                )
            remaining = target - t
            landing = h >= remaining - 1e-12 * max(1.0, abs(target))
            step = remaining if landing else h
            if step <= 1e-15 * max(1.0, abs(t)):
                raise SolverDivergenceException(
                    stats=SolveStats(nfe=f.nfe, accepted_steps=accepted, rejected_steps=rejected),
                    t=t,
                    reason="step size underflow",
                )
            y_new, ks = rk_step(f, y, t, step, tableau, k1)
            err = step * sum(weight * k.value for weight, k in zip(weights, ks) if weight != 0.0)
            norm = error_norm(err, y.value, y_new.value, cfg.atol, cfg.rtol)
            if not math.isfinite(norm):
                raise NumericException(t=t)
            if norm <= 1.0:
                y, k1 = y_new, ks[-1]
                t = target if landing else t + step
                accepted += 1
            else:
                rejected += 1
            h = next_step_size(step, norm, cfg)
        states.append(y)
    return states, SolveStats(nfe=f.nfe, accepted_steps=accepted, rejected_steps=rejected)
