import math

import numpy as np
import pytest

from src.domain.diffcore.mlp import Mlp
from src.domain.diffcore.tape import ParameterRegistry, Tape, backward
from src.domain.diffcore.tensor import Tensor
from src.domain.flow.exceptions import FlowStructureException, LayerSolveException, TraceDimensionException
from src.domain.flow.service import forward_density, rademacher, sample, trace_exact, trace_hutchinson
from src.domain.flow.values import FlowLayer, FlowStack
from src.domain.odesolve.values import SolverConfig
from src.domain.synthdata.seeds import SeedStream

TIGHT = SolverConfig(rtol=1e-8, atol=1e-8)


def linear_layer(registry: ParameterRegistry, matrix: np.ndarray, rng, name: str = "lin", index: int = 0) -> FlowLayer:
    """One flow layer with dynamics f(z, t) = A z."""
    dim = matrix.shape[0]
    dynamics = Mlp.create(registry, name, (dim + 1, dim), rng, activation="identity", time_input=True)
    registry.set(f"{name}.w0", np.vstack([matrix.T, np.zeros((1, dim))]))
    return FlowLayer(dynamics=dynamics, index=index, solver=TIGHT)


def zero_stack(registry: ParameterRegistry, rng, dim: int = 2, num_layers: int = 2) -> FlowStack:
    stack = FlowStack.create(registry, dim=dim, num_layers=num_layers, hidden=(8,), rng=rng, solver=TIGHT)
    registry.assign(np.zeros(registry.size))
    return stack


def standard_normal_log_prob(z: np.ndarray) -> np.ndarray:
    return -0.5 * np.sum(z**2, axis=-1) - 0.5 * z.shape[-1] * math.log(2.0 * math.pi)


class TestTrace:
    def test_linear_trace(self, registry, rng):
        A = np.array([[1.0, 2.0], [3.0, 4.0]])
        f = linear_layer(registry, A, rng).dynamics.bind(Tape(registry, recording=False))
        trace = trace_exact(f, Tensor(rng.standard_normal((3, 2))), 0.0)
        np.testing.assert_allclose(trace.value, 5.0, atol=1e-12)

    def test_constant_dynamics_have_zero_trace(self, registry, rng):
        f = linear_layer(registry, np.zeros((2, 2)), rng).dynamics
        registry.set("lin.b0", np.array([0.5, -1.0]))
        trace = trace_exact(f.bind(Tape(registry, recording=False)), Tensor(np.ones((1, 2))), 0.7)
        np.testing.assert_array_equal(trace.value, [0.0])

    def test_matches_finite_difference_jacobian(self, registry, rng):
        f = Mlp.create(registry, "f", (4, 12, 12, 3), rng, time_input=True).bind(Tape(registry, recording=False))
        z, t, h = rng.standard_normal((1, 3)), 0.4, 1e-5
        numeric = 0.0
        for j in range(3):
            step = np.zeros_like(z)
            step[0, j] = h
            numeric += (f(Tensor(z + step), t).value[0, j] - f(Tensor(z - step), t).value[0, j]) / (2.0 * h)
        assert trace_exact(f, Tensor(z), t).item() == pytest.approx(numeric, abs=1e-6)

    def test_exact_trace_dimension_limit(self, registry, rng):
        f = Mlp.create(registry, "wide", (18, 17), rng, time_input=True).bind(Tape(registry, recording=False))
        with pytest.raises(TraceDimensionException) as err:
            trace_exact(f, Tensor(np.zeros((1, 17))), 0.0)
        assert "hutchinson" in err.value.title

    def test_hutchinson_is_exact_for_diagonal_jacobian(self, registry, rng):
        f = linear_layer(registry, np.diag([1.0, 2.0]), rng).dynamics.bind(Tape(registry, recording=False))
        eps = rademacher(rng, (32, 2))
        estimates = trace_hutchinson(f, Tensor(rng.standard_normal((32, 2))), 0.0, Tensor(eps))
        np.testing.assert_allclose(estimates.value, 3.0, atol=1e-12)

    def test_hutchinson_is_even_in_the_probe(self, registry, rng):
        f = Mlp.create(registry, "f", (3, 8, 2), rng, time_input=True).bind(Tape(registry, recording=False))
        z, eps = Tensor(rng.standard_normal((5, 2))), rademacher(rng, (5, 2))
        np.testing.assert_allclose(
            trace_hutchinson(f, z, 0.2, Tensor(eps)).value, trace_hutchinson(f, z, 0.2, Tensor(-eps)).value, atol=1e-14
        )

    def test_hutchinson_mean_is_close_to_exact(self, registry, rng):
        f = Mlp.create(registry, "f", (4, 16, 3), rng, time_input=True).bind(Tape(registry, recording=False))
        z = rng.standard_normal((1, 3))
        exact = trace_exact(f, Tensor(z), 0.5).item()
        probes = rademacher(rng, (10_000, 3))
        estimates = trace_hutchinson(f, Tensor(np.repeat(z, 10_000, axis=0)), 0.5, Tensor(probes)).value
        standard_error = estimates.std(ddof=1) / math.sqrt(estimates.size)
        assert abs(estimates.mean() - exact) <= 4.0 * standard_error + 1e-12

    def test_rademacher_entries(self, rng):
        assert set(np.unique(rademacher(rng, (100, 3)))) == {-1.0, 1.0}


class TestStack:
    def test_rejects_mixed_widths(self, registry, rng):
        narrow = linear_layer(registry, np.eye(2), rng, name="a")
        wide = linear_layer(registry, np.eye(3), rng, name="b", index=1)
        with pytest.raises(FlowStructureException):
            FlowStack(layers=(narrow, wide), dim=2)

    def test_rejects_empty_stack(self):
        with pytest.raises(FlowStructureException):
            FlowStack(layers=(), dim=2)

    def test_rejects_dynamics_without_time(self, registry, rng):
        dynamics = Mlp.create(registry, "plain", (2, 2), rng)
        with pytest.raises(FlowStructureException):
            FlowLayer(dynamics=dynamics, index=0)

    def test_create_registers_each_layer(self, registry, rng):
        stack = FlowStack.create(registry, dim=2, num_layers=3, hidden=(8, 8), rng=rng)
        assert stack.num_layers == 3
        assert registry.count("flow.2.") == 3 * 8 + 8 + 8 * 8 + 8 + 8 * 2 + 2


class TestForwardDensity:
    def test_identity_flow(self, registry, rng):
        stack = zero_stack(registry, rng)
        x = rng.standard_normal((6, 2))
        flow = forward_density(stack, Tensor(x), Tape(registry, recording=False))
        np.testing.assert_array_equal(flow.z.value, x)
        np.testing.assert_array_equal(flow.delta_logp.value, np.zeros(6))
        assert len(flow.stats) == 2
        assert flow.total_nfe == sum(item.nfe for item in flow.stats)

    def test_constant_trace_linear_flow(self, registry, rng):
        A = np.array([[1.0, 2.0], [3.0, 4.0]]) * 0.1
        stack = FlowStack(layers=(linear_layer(registry, A, rng),), dim=2)
        flow = forward_density(stack, Tensor(rng.standard_normal((4, 2))), Tape(registry, recording=False))
        np.testing.assert_allclose(flow.delta_logp.value, -0.5, atol=1e-7)

    def test_linear_flow_density_is_exact(self, registry, rng):
        a = 0.7
        stack = FlowStack(layers=(linear_layer(registry, np.array([[a]]), rng),), dim=1)
        x = np.linspace(-2.0, 2.0, 9)[:, None]
        flow = forward_density(stack, Tensor(x), Tape(registry, recording=False))
        log_p = standard_normal_log_prob(flow.z.value) - flow.delta_logp.value
        analytic = standard_normal_log_prob(x * math.exp(a)) + a
        np.testing.assert_allclose(log_p, analytic, atol=1e-5)

    def test_hutchinson_mode_runs(self, registry, rng):
        stack = FlowStack.create(registry, dim=2, num_layers=1, hidden=(8,), rng=rng, trace_mode="hutchinson")
        flow = forward_density(stack, Tensor(rng.standard_normal((5, 2))), Tape(registry, recording=False), rng=rng)
        assert flow.delta_logp.shape == (5,)
        assert np.all(np.isfinite(flow.delta_logp.value))

    def test_hutchinson_mode_needs_a_generator(self, registry, rng):
        stack = FlowStack.create(registry, dim=2, num_layers=1, hidden=(8,), rng=rng, trace_mode="hutchinson")
        with pytest.raises(FlowStructureException):
            forward_density(stack, Tensor(rng.standard_normal((3, 2))), Tape(registry, recording=False))

    def test_hutchinson_mode_is_reproducible_from_a_seed(self, registry, rng):
        stack = FlowStack.create(registry, dim=2, num_layers=1, hidden=(8,), rng=rng, trace_mode="hutchinson")
        x = Tensor(SeedStream(5).normal("x", (6, 2)))
        first, second = (
            forward_density(stack, x, Tape(registry, recording=False), rng=SeedStream(9).fresh("hutchinson"))
            for _ in range(2)
        )
        np.testing.assert_array_equal(first.delta_logp.value, second.delta_logp.value)

    def test_solver_failure_names_the_layer(self, registry, rng):
        starved = SolverConfig(rtol=1e-10, atol=1e-10, max_steps=2)
        stack = FlowStack.create(registry, dim=2, num_layers=2, hidden=(8,), rng=rng, solver=starved, init_scale=2.0)
        with pytest.raises(LayerSolveException) as err:
            forward_density(stack, Tensor(rng.standard_normal((8, 2)) * 3.0), Tape(registry, recording=False))
        assert err.value.layer == 0

    def test_gradient_matches_finite_differences(self, rng):
        registry = ParameterRegistry()
        stack = FlowStack.create(
            registry, dim=1, num_layers=1, hidden=(4,), rng=rng, solver=SolverConfig(rtol=1e-10, atol=1e-10)
        )
        x = Tensor(np.array([[0.3], [-1.1]]))

        def log_likelihood(tape: Tape) -> Tensor:
            flow = forward_density(stack, x, tape)
            return (-0.5 * flow.z.square().sum(axis=-1) - flow.delta_logp).sum()

        tape = Tape(registry)
        analytic = backward(tape, log_likelihood(tape))
        base, h = registry.flat.copy(), 1e-5
        for index in range(registry.size):
            shifted = []
            for sign in (1.0, -1.0):
                trial = base.copy()
                trial[index] += sign * h
                registry.assign(trial)
                shifted.append(log_likelihood(Tape(registry, recording=False)).item())
            registry.assign(base)
            numeric = (shifted[0] - shifted[1]) / (2.0 * h)
            assert analytic[index] == pytest.approx(numeric, rel=1e-4, abs=1e-7)


class TestSample:
    def test_identity_flow(self, registry, rng):
        stack = zero_stack(registry, rng)
        z = rng.standard_normal((4, 2))
        x, stats = sample(stack, Tensor(z), Tape(registry, recording=False))
        np.testing.assert_array_equal(x.value, z)
        assert len(stats) == 2

    def test_linear_flow_analytic(self, registry, rng):
        a = 0.4
        stack = FlowStack(layers=(linear_layer(registry, np.array([[a]]), rng),), dim=1)
        z = np.array([[1.0], [-2.5]])
        x, _ = sample(stack, Tensor(z), Tape(registry, recording=False))
        np.testing.assert_allclose(x.value, z * math.exp(-a), rtol=1e-6)

    def test_round_trip(self, registry, rng):
        stack = FlowStack.create(registry, dim=2, num_layers=2, hidden=(16, 16), rng=rng, solver=TIGHT)
        tape = Tape(registry, recording=False)
        x = rng.standard_normal((100, 2))
        recovered, _ = sample(stack, forward_density(stack, Tensor(x), tape).z, tape)
        bound = 10.0 * (1e-8 + 1e-8 * np.abs(x).max())
        assert np.max(np.abs(recovered.value - x)) <= bound
