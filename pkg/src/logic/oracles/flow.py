from __future__ import annotations

import numpy as np

from src.domain.diffcore.mlp import Mlp
from src.domain.diffcore.tape import ParameterRegistry, Tape
from src.domain.diffcore.tensor import Tensor
from src.domain.flow.service import forward_density, rademacher, sample, trace_exact, trace_hutchinson
from src.domain.flow.values import FlowStack
from src.domain.odesolve.values import SolverConfig
from src.domain.synthdata.seeds import SeedStream
from src.domain.train.service import fixed_tolerance
from src.logic.oracles.checks import within_standard_errors
from src.logic.oracles.registry import OracleOutcome, oracle

HUTCHINSON_NETWORKS = 10
HUTCHINSON_PROBES = 10_000


def _dynamics(registry: ParameterRegistry, name: str, dim: int, rng: np.random.Generator) -> Mlp:
    return Mlp.create(registry, name, (dim + 1, 16, 16, dim), rng, activation="softplus", time_input=True)


@oracle("flow.exact_trace")
def exact_trace() -> OracleOutcome:
    stream = SeedStream(21)
    registry = ParameterRegistry()
    f = _dynamics(registry, "f", 3, stream.generator("oracle.trace.init")).bind(Tape(registry, recording=False))
    z, t, h = stream.normal("oracle.trace.z", (1, 3)), 0.3, 1e-5
    numeric = 0.0
    for j in range(3):
        step = np.zeros_like(z)
        step[0, j] = h
        numeric += (f(Tensor(z + step), t).value[0, j] - f(Tensor(z - step), t).value[0, j]) / (2.0 * h)
    exact = float(trace_exact(f, Tensor(z), t).value[0])
    error = abs(exact - numeric)
    return OracleOutcome(measured=error, expected=0.0, tolerance=1e-6, passed=error <= 1e-6)


@oracle("flow.hutchinson_unbiased", criterion="hutchinson-unbiasedness")
def hutchinson_unbiased() -> OracleOutcome:
    stream = SeedStream(22)
    worst, failures = 0.0, 0
    for index in range(HUTCHINSON_NETWORKS):
        registry = ParameterRegistry()
        f = _dynamics(registry, f"f{index}", 4, stream.generator("oracle.hutchinson.init"))
        bound = f.bind(Tape(registry, recording=False))
        z = stream.normal("oracle.hutchinson.z", (1, 4))
        exact = float(trace_exact(bound, Tensor(z), 0.5).value[0])
        probes = rademacher(stream.generator("oracle.hutchinson.eps"), (HUTCHINSON_PROBES, 4))
        estimates = trace_hutchinson(bound, Tensor(np.repeat(z, HUTCHINSON_PROBES, axis=0)), 0.5, Tensor(probes))
        mean, se, ok = within_standard_errors(estimates.value, exact)
        worst = max(worst, abs(mean - exact) / se if se > 0 else 0.0)
        failures += not ok
    return OracleOutcome(
        measured=worst,
        expected=0.0,
        tolerance="3 standard errors",
        passed=failures == 0,
        detail=f"{failures} of {HUTCHINSON_NETWORKS} networks outside the bound",
    )


@oracle("flow.hutchinson_diagonal", criterion="hutchinson-unbiasedness")
def hutchinson_diagonal() -> OracleOutcome:
    """A diagonal Jacobian makes every single-probe estimate exact."""
    stream = SeedStream(23)
    registry = ParameterRegistry()
    f = Mlp.create(registry, "diag", (4, 4), stream.generator("oracle.diagonal.init"), activation="identity")
    registry.set("diag.w0", np.diag(stream.normal("oracle.diagonal.w", 4)))
    bound = f.bind(Tape(registry, recording=False))
    z = stream.normal("oracle.diagonal.z", (1, 4))
    exact = float(trace_exact(bound, Tensor(z), 0.0).value[0])
    probes = rademacher(stream.generator("oracle.diagonal.eps"), (256, 4))
    estimates = trace_hutchinson(bound, Tensor(np.repeat(z, 256, axis=0)), 0.0, Tensor(probes)).value
    error = float(np.max(np.abs(estimates - exact)))
    return OracleOutcome(measured=error, expected=0.0, tolerance=1e-12, passed=error <= 1e-12)


@oracle("flow.sample_round_trip")
def sample_round_trip() -> OracleOutcome:
    stream = SeedStream(24)
    registry = ParameterRegistry()
    tolerance = 1e-8
    stack = FlowStack.create(
        registry, dim=2, num_layers=2, hidden=(16, 16), rng=stream.generator("oracle.roundtrip.init"),
        solver=SolverConfig(rtol=tolerance, atol=tolerance),
    )
    tape = Tape(registry, recording=False)
    x = stream.normal("oracle.roundtrip.x", (64, 2))
    flow = forward_density(stack, Tensor(x), tape)
    recovered, _ = sample(stack, flow.z, tape)
    bound = 10.0 * (tolerance + tolerance * np.abs(x))
    excess = float(np.max(np.abs(recovered.value - x) / bound))
    return OracleOutcome(measured=excess, expected="<= 1", tolerance="10 (atol + rtol |x|)", passed=excess <= 1.0)


@oracle("flow.nfe_grows_with_precision", criterion="nfe-tolerance-monotonicity")
def nfe_grows_with_precision() -> OracleOutcome:
    stream = SeedStream(25)
    registry = ParameterRegistry()
    stack = FlowStack.create(registry, dim=2, num_layers=2, hidden=(32, 32), rng=stream.generator("oracle.nfe.init"))
    x = Tensor(stream.normal("oracle.nfe.x", (128, 2)))
    nfe = {}
    for tolerance in (1e-3, 1e-7):
        flow = forward_density(stack, x, Tape(registry, recording=False), solver_for=fixed_tolerance(tolerance))
        nfe[tolerance] = float(np.mean([item.nfe for item in flow.stats]))
    return OracleOutcome(
        measured=nfe[1e-7] - nfe[1e-3],
        expected="> 0",
        tolerance="-",
        passed=nfe[1e-7] > nfe[1e-3],
        detail=f"mean nfe {nfe[1e-3]:.1f} at 1e-3, {nfe[1e-7]:.1f} at 1e-7",
    )
