import math

import numpy as np
import pytest

from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from src.domain.diffcore.exceptions import (
    DomainErrorException,
    DuplicateParameterException,
    NonScalarRootException,
    ShapeMismatchException,
    UnknownParameterException,
)
from src.domain.diffcore.mlp import Mlp, jvp, vjp
from src.domain.diffcore.tape import ParameterRegistry, Tape, backward, gradients
from src.domain.diffcore.tensor import Tensor, concat
from src.logic.oracles.checks import input_gradient_check, parameter_gradient_check, relative_error
from src.logic.oracles.diffcore import PRIMITIVE_CASES

finite = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)


class TestForward:
    def test_softplus_at_zero(self):
        assert Tensor(0.0).softplus().item() == pytest.approx(math.log(2.0), abs=1e-15)

    def test_identity_matmul(self):
        v = np.array([1.5, -2.0, 0.25])
        np.testing.assert_array_equal((Tensor(np.eye(3)) @ Tensor(v)).value, v)

    def test_logsumexp_of_zeros(self):
        assert Tensor([0.0, 0.0]).logsumexp().item() == pytest.approx(math.log(2.0), abs=1e-15)

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(ShapeMismatchException) as err:
            Tensor(np.ones((2, 3))) @ Tensor(np.ones((2, 3)))
        assert "(2, 3)" in err.value.title

    def test_log_of_non_positive_is_a_domain_error(self):
        with pytest.raises(DomainErrorException):
            Tensor([1.0, 0.0]).log()

    def test_concat_and_slice(self):
        joined = concat([Tensor(np.ones((2, 1))), Tensor(np.zeros((2, 2)))], axis=-1)
        assert joined.shape == (2, 3)
        np.testing.assert_array_equal(joined[:, 0].value, [1.0, 1.0])


class TestBackward:
    def test_square(self, registry):
        registry.register("theta", 3.0)
        tape = Tape(registry)
        grad = backward(tape, tape.param("theta").square())
        np.testing.assert_array_equal(grad, [6.0])

    def test_softplus_slope_at_zero(self, registry):
        registry.register("theta", np.zeros(4))
        tape = Tape(registry)
        grad = backward(tape, tape.param("theta").softplus().sum())
        np.testing.assert_allclose(grad, 0.5, atol=1e-15)

    def test_unused_parameters_get_exact_zero(self, registry):
        registry.register("used", np.ones(2))
        registry.register("unused", np.ones(3))
        tape = Tape(registry)
        grad = backward(tape, tape.param("used").exp().sum())
        assert np.all(grad[registry.entry("unused").offset :] == 0.0)

    def test_non_scalar_root(self, registry):
        registry.register("theta", np.ones(2))
        tape = Tape(registry)
        with pytest.raises(NonScalarRootException):
            backward(tape, tape.param("theta") * 2.0)

    @pytest.mark.parametrize("op", sorted(PRIMITIVE_CASES))
    def test_primitive_matches_finite_differences(self, op, stream):
        x = stream.normal(f"primitive.{op}", (3, 4))
        analytic, numeric = input_gradient_check(PRIMITIVE_CASES[op], x)
        assert relative_error(analytic, numeric) <= 1e-6

    def test_mlp_matches_finite_differences(self, registry, rng):
        net = Mlp.create(registry, "net", (3, 6, 2), rng)
        x = rng.standard_normal((4, 3))
        analytic, numeric = parameter_gradient_check(registry, lambda tape: net.bind(tape)(Tensor(x)).square().sum())
        assert relative_error(analytic, numeric) <= 1e-6

    def test_taping_is_deterministic(self, registry, rng):
        net = Mlp.create(registry, "net", (2, 5, 1), rng, activation="tanh")
        x = rng.standard_normal((3, 2))

        def run():
            tape = Tape(registry)
            out = net.bind(tape)(Tensor(x), 0.3).sum()
            return out.item(), backward(tape, out)

        (first, grad_a), (second, grad_b) = run(), run()
        assert first == second
        np.testing.assert_array_equal(grad_a, grad_b)

    def test_gradients_with_respect_to_leaves(self):
        tape = Tape()
        x = tape.watch(np.array([1.0, 2.0]))
        (grad,) = gradients(tape, (x * x).sum(), [x])
        np.testing.assert_array_equal(grad, [2.0, 4.0])


class TestRegistry:
    def test_flat_layout(self, registry):
        registry.register("a", np.ones((2, 2)))
        registry.register("b", np.zeros(3))
        assert registry.size == 7
        assert registry.entry("b").offset == 4
        assert registry.count("a") == 4

    def test_duplicate_name(self, registry):
        registry.register("a", 1.0)
        with pytest.raises(DuplicateParameterException):
            registry.register("a", 2.0)

    def test_unknown_name(self, registry):
        with pytest.raises(UnknownParameterException):
            registry.get("missing")

    def test_manifest_round_trip(self, registry, rng):
        Mlp.create(registry, "net", (2, 3, 2), rng)
        restored = ParameterRegistry.from_manifest(registry.to_manifest(), registry.flat)
        assert restored.to_manifest() == registry.to_manifest()
        np.testing.assert_array_equal(restored.flat, registry.flat)


class TestTangents:
    def test_linear_jvp_is_a_column(self, registry, rng):
        net = Mlp.create(registry, "lin", (2, 2), rng, activation="identity")
        registry.set("lin.w0", np.array([[1.0, 2.0], [3.0, 4.0]]).T)
        tape = Tape(registry)
        out = jvp(net.bind(tape), Tensor([[0.7, -0.2]]), 0.0, Tensor([[1.0, 0.0]]))
        np.testing.assert_allclose(out.value, [[1.0, 3.0]])

    def test_zero_tangent(self, registry, rng):
        net = Mlp.create(registry, "net", (3, 4, 3), rng)
        tape = Tape(registry)
        out = jvp(net.bind(tape), Tensor(rng.standard_normal((2, 3))), 0.1, Tensor(np.zeros((2, 3))))
        np.testing.assert_array_equal(out.value, 0.0)

    def test_tangent_shape_mismatch(self, registry, rng):
        net = Mlp.create(registry, "net", (3, 4, 3), rng)
        with pytest.raises(ShapeMismatchException):
            jvp(net.bind(Tape(registry)), Tensor(np.zeros((2, 3))), 0.0, Tensor(np.zeros((1, 3))))

    @settings(max_examples=25, deadline=None)
    @given(
        z=arrays(np.float64, (1, 3), elements=finite),
        u=arrays(np.float64, (1, 3), elements=finite),
        v=arrays(np.float64, (1, 3), elements=finite),
        t=finite,
    )
    def test_jvp_vjp_duality(self, z, u, v, t):
        registry = ParameterRegistry()
        net = Mlp.create(registry, "net", (4, 6, 3), np.random.default_rng(5), time_input=True)
        bound = net.bind(Tape(registry, recording=False))
        forward_mode = float(np.sum(u * jvp(bound, Tensor(z), t, Tensor(v)).value))
        reverse_mode = float(np.sum(v * vjp(bound, Tensor(z), t, Tensor(u)).value))
        assert abs(forward_mode - reverse_mode) <= 1e-12 * (1.0 + abs(forward_mode))
