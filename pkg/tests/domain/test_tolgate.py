import math

import numpy as np
import pytest

from src.domain.diffcore.tape import ParameterRegistry, Tape, backward
from src.domain.diffcore.tensor import Tensor
from src.domain.flow.service import forward_density
from src.domain.flow.values import FlowStack
from src.domain.odesolve.values import SolverConfig
from src.domain.synthdata.seeds import SeedStream
from src.domain.tolgate.entities import Baseline
from src.domain.tolgate.exceptions import EmptyBatchException, GateCountException
from src.domain.tolgate.service import (
    GateController,
    calibrate_alpha,
    gate_feature_summary,
    gated_objective,
    reinforce_surrogate,
    returns,
    sample_gate,
    sample_tolerances,
    tolerance_from_log10,
)
from src.domain.tolgate.values import GatePolicy


@pytest.fixture
def policy(registry, rng) -> GatePolicy:
    return GatePolicy.create(registry, num_layers=2, dim=2, hidden=4, rng=rng)


class TestSummary:
    def test_identical_rows(self):
        v = np.array([0.5, -2.0, 3.0])
        np.testing.assert_array_equal(gate_feature_summary(np.tile(v, (7, 1))), v)

    def test_symmetric_batch(self):
        v = np.array([1.5, -0.25])
        np.testing.assert_array_equal(gate_feature_summary(np.stack([v, -v])), [0.0, 0.0])

    def test_random_batch_is_its_mean(self, stream):
        batch = stream.normal("batch", (33, 4))
        np.testing.assert_allclose(gate_feature_summary(batch), batch.mean(axis=0), atol=1e-15)

    def test_empty_batch(self):
        with pytest.raises(EmptyBatchException):
            gate_feature_summary(np.zeros((0, 2)))


class TestSampling:
    @pytest.mark.parametrize("value, expected", [(-9.3, 1e-8), (-5.0, 1e-5), (0.4, 1e-1)])
    def test_clamp(self, value, expected):
        assert tolerance_from_log10(value) == pytest.approx(expected, rel=1e-12)

    def test_initial_policy_mean(self, policy, registry):
        gate = sample_gate(policy, 0, np.array([3.0, -1.0]), Tape(registry, recording=False), rng=None)
        assert gate.mu == pytest.approx(-5.0)
        assert gate.sigma == pytest.approx(0.5)
        assert gate.tolerance == pytest.approx(1e-5)

    def test_vanishing_sigma_is_deterministic(self, policy, registry):
        registry.set("gate.0.b1", np.array([-3.0, math.log(1e-12)]))
        rng = SeedStream(9).generator("draws")
        draws = [sample_gate(policy, 0, np.zeros(2), Tape(registry, recording=False), rng).tolerance for _ in range(5)]
        np.testing.assert_allclose(draws, 1e-3, rtol=1e-9)

    def test_fixed_seed_repeats(self, policy, registry):
        def draw():
            rng = SeedStream(10).generator("draws")
            tape = Tape(registry, recording=False)
            return [gate.tolerance for gate in sample_tolerances(policy, [np.zeros(2), np.ones(2)], tape, rng)]

        assert draw() == draw()

    def test_one_summary_per_layer(self, policy, registry):
        with pytest.raises(GateCountException):
            sample_tolerances(policy, [np.zeros(2)], Tape(registry, recording=False), None)

    def test_log_prob_is_of_the_unclamped_draw(self, policy, registry):
        registry.set("gate.0.b1", np.array([-20.0, 0.0]))
        gate = sample_gate(policy, 0, np.zeros(2), Tape(registry, recording=False), SeedStream(11).generator("g"))
        assert gate.tolerance == pytest.approx(1e-8, rel=1e-12)
        z = gate.log10_tolerance + 20.0
        assert gate.log_prob.item() == pytest.approx(-0.5 * z * z - 0.5 * math.log(2.0 * math.pi))


class TestReturns:
    def test_single_layer_without_penalty(self):
        np.testing.assert_array_equal(returns(2.5, [-40.0], 0.0), [-2.5])

    def test_cumulative_future_rewards(self):
        np.testing.assert_allclose(returns(1.0, [-10.0, -20.0], 2.0), [-31.0, -21.0])

    def test_zero_rewards(self):
        np.testing.assert_array_equal(returns(0.7, [0.0, 0.0, 0.0], 5.0), [-0.7, -0.7, -0.7])

    def test_calibration_balances_terms(self):
        alpha = calibrate_alpha(2.0, [-10.0, -30.0])
        assert alpha == pytest.approx(0.1 * 2.0 * 2 / 40.0)
        assert calibrate_alpha(2.0, [0.0]) == 0.0


class TestBaseline:
    def test_first_step_has_zero_advantage(self):
        baseline = Baseline(num_layers=2)
        np.testing.assert_array_equal(baseline.advantages(np.array([-3.0, -1.0])), [0.0, 0.0])

    def test_moving_average(self):
        baseline = Baseline(num_layers=1, decay=0.5)
        baseline.advantages(np.array([-4.0]))
        np.testing.assert_array_equal(baseline.advantages(np.array([-2.0])), [-2.0 + 4.0])
        np.testing.assert_array_equal(baseline.values, [-3.0])

    def test_disabled_passes_returns_through(self):
        baseline = Baseline(num_layers=1, enabled=False)
        np.testing.assert_array_equal(baseline.advantages(np.array([-6.0])), [-6.0])
        assert baseline.values is None

    def test_layer_count(self):
        with pytest.raises(GateCountException):
            Baseline(num_layers=2).advantages(np.array([1.0]))


class TestSurrogate:
    def _gated_pass(self, registry, rng):
        stack = FlowStack.create(registry, dim=2, num_layers=2, hidden=(8,), rng=rng)
        policy = GatePolicy.create(registry, num_layers=2, dim=2, hidden=4, rng=rng)
        tape = Tape(registry)
        controller = GateController(policy, tape, rng=SeedStream(12).generator("gates"))
        flow = forward_density(stack, Tensor(SeedStream(13).normal("x", (16, 2))), tape, solver_for=controller)
        samples = controller.attach_stats(flow.stats)
        loss = (flow.z.square().sum(axis=-1) * 0.5 - flow.delta_logp).mean()
        return tape, loss, samples, flow

    def test_rewards_are_negative_nfe(self, registry, rng):
        _, _, samples, flow = self._gated_pass(registry, rng)
        assert [gate.reward for gate in samples] == [-float(item.nfe) for item in flow.stats]
        assert all(1e-8 <= gate.tolerance <= 1e-1 for gate in samples)

    def test_zero_advantages_leave_the_loss_gradient(self, registry, rng):
        tape, loss, samples, _ = self._gated_pass(registry, rng)
        surrogate = reinforce_surrogate(loss, samples, [0.0, 0.0])
        np.testing.assert_array_equal(backward(tape, surrogate), backward(tape, loss))

    def test_gate_parameters_only_see_the_policy_term(self, registry, rng):
        tape, loss, samples, _ = self._gated_pass(registry, rng)
        gate_mask = registry.mask(["gate."])
        flow_mask = registry.mask(["flow."])
        assert np.all(backward(tape, loss)[gate_mask] == 0.0)
        surrogate, layer_returns = gated_objective(loss, samples, alpha=0.01, baseline=Baseline(2, enabled=False))
        grads = backward(tape, surrogate)
        np.testing.assert_allclose(grads[flow_mask], backward(tape, loss)[flow_mask], atol=1e-12)
        assert np.any(grads[gate_mask] != 0.0)
        assert layer_returns.shape == (2,)

    def test_controller_sets_solver_tolerance(self, registry, rng):
        stack = FlowStack.create(registry, dim=2, num_layers=1, hidden=(8,), rng=rng, solver=SolverConfig())
        policy = GatePolicy.create(registry, num_layers=1, dim=2, hidden=4, rng=rng)
        controller = GateController(policy, Tape(registry, recording=False))
        cfg = controller(stack.layers[0], np.ones((3, 2)))
        assert cfg.rtol == cfg.atol == pytest.approx(1e-5)
        assert len(controller.samples) == 1
