from __future__ import annotations

from collections.abc import Callable

import numpy as np

from src.domain.diffcore.mlp import BoundMlp
from src.domain.diffcore.tape import Tape
from src.domain.diffcore.tensor import Tensor, as_tensor, concat
from src.domain.flow.exceptions import FlowStructureException, LayerSolveException, TraceDimensionException
from src.domain.flow.values import EXACT_TRACE_MAX_DIM, FlowLayer, FlowPass, FlowStack
from src.domain.odesolve.exceptions import SolverException
from src.domain.odesolve.service import integrate
from src.domain.odesolve.values import SolverConfig, SolveStats

SolverSelector = Callable[[FlowLayer, np.ndarray], SolverConfig]


def default_solver(layer: FlowLayer, layer_input: np.ndarray) -> SolverConfig:
    return layer.solver


def _basis(shape: tuple[int, ...]) -> list[Tensor]:
    basis = []
    for j in range(shape[-1]):
        direction = np.zeros(shape)
        direction[..., j] = 1.0
        basis.append(Tensor(direction))
    return basis


def exact_trace_terms(f: BoundMlp, z: Tensor, t: float) -> tuple[Tensor, Tensor]:
    """Dynamics output and per-item Jacobian trace from one tangent-carrying pass."""
    z = as_tensor(z)
    dim = z.shape[-1]
    if dim > EXACT_TRACE_MAX_DIM:
        raise TraceDimensionException(dim=dim, limit=EXACT_TRACE_MAX_DIM)
    out, tangents = f.with_tangents(z, t, _basis(z.shape))
    total = None
    for j, tangent in enumerate(tangents):
        diagonal = tangent[..., j]
        total = diagonal if total is None else total + diagonal
    return out, total


def trace_exact(f: BoundMlp, z: Tensor, t: float) -> Tensor:
    return exact_trace_terms(f, z, t)[1]


def hutchinson_trace_terms(f: BoundMlp, z: Tensor, t: float, eps: Tensor) -> tuple[Tensor, Tensor]:
    eps = as_tensor(eps)
    out, (tangent,) = f.with_tangents(z, t, [eps])
    return out, (tangent * eps).sum(axis=-1)


def trace_hutchinson(f: BoundMlp, z: Tensor, t: float, eps: Tensor) -> Tensor:
    """Single-probe estimate eps . (df/dz) eps; unbiased for Rademacher probes."""
    return hutchinson_trace_terms(f, z, t, eps)[1]


def rademacher(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    return rng.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0


def _augmented_dynamics(f: BoundMlp, dim: int, trace_mode: str, eps: Tensor | None):
    def dynamics(state: Tensor, t: float) -> Tensor:
        z = state[..., :dim]
        if trace_mode == "exact":
            dz, trace = exact_trace_terms(f, z, t)
        else:
            dz, trace = hutchinson_trace_terms(f, z, t, eps)
        return concat([dz, -trace[..., None]], axis=-1)

    return dynamics


def _solve_layer(layer: FlowLayer, dynamics, state: Tensor, cfg: SolverConfig) -> tuple[Tensor, SolveStats]:
    try:
        return integrate(dynamics, state, 0.0, 1.0, cfg)
    except SolverException as err:
        raise LayerSolveException(layer=layer.index, cause=err) from err


def forward_density(
    stack: FlowStack,
    x: Tensor,
    tape: Tape,
    solver_for: SolverSelector = default_solver,
    rng: np.random.Generator | None = None,
) -> FlowPass:
    """Transport data to latent space, accumulating d(delta)/dt = -Tr(df/dz) per layer.

    Under this sign convention log p(x) = log p_prior(z) - sum_k delta_k. Hutchinson stacks
    draw their probes from ``rng``, which is then required.
    """
    if stack.trace_mode == "hutchinson" and rng is None:
        raise FlowStructureException(detail="hutchinson trace mode needs a seeded probe generator")
    z = as_tensor(x)
    delta = None
    stats, tolerances = [], []
    for layer in stack.layers:
        cfg = solver_for(layer, z.value)
        eps = None
        if stack.trace_mode == "hutchinson":
            eps = Tensor(rademacher(rng, z.shape))
        f = layer.dynamics.bind(tape)
        state = concat([z, Tensor(np.zeros(z.shape[:-1] + (1,)))], axis=-1)
        final, layer_stats = _solve_layer(layer, _augmented_dynamics(f, stack.dim, stack.trace_mode, eps), state, cfg)
        z = final[..., : stack.dim]
        layer_delta = final[..., stack.dim]
        delta = layer_delta if delta is None else delta + layer_delta
        stats.append(layer_stats)
        tolerances.append(cfg.rtol)
    return FlowPass(z=z, delta_logp=delta, stats=tuple(stats), tolerances=tuple(tolerances))


def sample(
    stack: FlowStack,
    z: Tensor,
    tape: Tape,
    solver_for: SolverSelector = default_solver,
) -> tuple[Tensor, tuple[SolveStats, ...]]:
    """Latent to data: each layer integrated from t=1 back to t=0, last layer first."""
    x = as_tensor(z)
    stats = []
    for layer in reversed(stack.layers):
        f = layer.dynamics.bind(tape)

        def reversed_dynamics(y: Tensor, s: float, f=f) -> Tensor:
            return -f(y, 1.0 - s)

        x, layer_stats = _solve_layer(layer, reversed_dynamics, x, solver_for(layer, x.value))
        stats.append(layer_stats)
    return x, tuple(reversed(stats))
