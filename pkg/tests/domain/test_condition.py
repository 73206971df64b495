import math

from dataclasses import replace

import numpy as np
import pytest

from scipy import stats

from src.domain.condition.exceptions import ConditionConfigException, InvalidLabelException, PartitionException
from src.domain.condition.service import (
    ccnf_loss,
    classifier_logits,
    conditional_log_prior,
    conditional_loss,
    conditional_sample,
    cross_entropy,
    gaussian_log_prob,
    infocnf_loss,
    marginal_log_prob,
    marginal_nll,
    one_hot,
    predict,
    standard_normal_log_prob,
)
from src.domain.condition.values import Classifier, LatentPartition
from src.domain.diffcore.tape import ParameterRegistry, Tape
from src.domain.diffcore.tensor import Tensor
from src.domain.flow.exceptions import FlowStructureException
from src.domain.flow.service import forward_density
from src.domain.synthdata.seeds import SeedStream
from src.domain.train.datasets import flow_dataset
from src.domain.train.models import build_flow
from src.logic.oracles.condition import small_conditional_config


def zeroed_model(task: str = "infocnf", classes: int = 4):
    """Zero flow dynamics, a zero prior head and a zero classifier."""
    config = small_conditional_config(task, classes=classes, per_class=8)
    registry = ParameterRegistry()
    bundle = build_flow(config, registry, SeedStream(0).generator("init"), (classes,))
    registry.assign(np.zeros(registry.size))
    return bundle.model, registry


class TestPartition:
    def test_halves(self):
        partition = LatentPartition.halves(2)
        assert (partition.d_y, partition.d_u) == (1, 1)
        assert partition.unsupervised == slice(1, 2)

    def test_full(self):
        partition = LatentPartition.full(3)
        assert (partition.d_y, partition.d_u) == (3, 0)

    def test_several_factors(self):
        partition = LatentPartition(d_total=6, factor_widths=(2, 1))
        assert partition.blocks == [slice(0, 2), slice(2, 3)]
        assert partition.d_u == 3

    @pytest.mark.parametrize("widths", [(), (0,), (3, 2)])
    def test_invalid(self, widths):
        with pytest.raises(PartitionException):
            LatentPartition(d_total=4, factor_widths=widths)

    def test_dropout_range(self, registry):
        with pytest.raises(ConditionConfigException):
            Classifier.create(registry, LatentPartition.halves(2), (2,), dropout=1.0)


class TestDensities:
    def test_gaussian_matches_scipy(self, stream):
        z = stream.normal("z", (20, 3))
        mu, log_sigma = stream.normal("mu", (20, 3)), stream.normal("s", (20, 3)) * 0.3
        ours = gaussian_log_prob(Tensor(z), Tensor(mu), Tensor(log_sigma)).value
        reference = stats.norm.logpdf(z, loc=mu, scale=np.exp(log_sigma)).sum(axis=-1)
        np.testing.assert_allclose(ours, reference, atol=1e-12)

    def test_zero_prior_is_standard_normal(self):
        model, registry = zeroed_model()
        z = SeedStream(3).normal("z", (5, 2))
        labels = np.array([0, 1, 2, 3, 0])
        log_prior = conditional_log_prior(Tensor(z), labels, model, Tape(registry, recording=False))
        np.testing.assert_allclose(log_prior.value, standard_normal_log_prob(Tensor(z)).value, atol=1e-12)

    def test_labels_out_of_range(self):
        model, registry = zeroed_model()
        with pytest.raises(InvalidLabelException) as err:
            conditional_log_prior(Tensor(np.zeros((2, 2))), np.array([0, 4]), model, Tape(registry, recording=False))
        assert err.value.label == 4

    def test_marginal_with_identical_classes(self):
        model, registry = zeroed_model()
        tape = Tape(registry, recording=False)
        flow = forward_density(model.stack, Tensor(SeedStream(4).normal("x", (6, 2))), tape)
        marginal = marginal_log_prob(model, flow, tape)
        np.testing.assert_allclose(marginal.value, standard_normal_log_prob(flow.z).value, atol=1e-12)

    def test_marginal_nll_of_a_zero_model(self):
        model, registry = zeroed_model()
        x = SeedStream(4).normal("x", (6, 2))
        nll = marginal_nll(model, x, Tape(registry, recording=False))
        expected = -stats.multivariate_normal(mean=np.zeros(2)).logpdf(x).mean()
        assert nll.item() == pytest.approx(expected, abs=1e-10)

    def test_marginal_nll_with_hutchinson_traces(self):
        model, registry = zeroed_model()
        model = replace(model, stack=replace(model.stack, trace_mode="hutchinson"))
        x = SeedStream(4).normal("x", (6, 2))
        with pytest.raises(FlowStructureException):
            marginal_nll(model, x, Tape(registry, recording=False))
        nll = marginal_nll(model, x, Tape(registry, recording=False), rng=SeedStream(4).fresh("hutchinson"))
        expected = -stats.multivariate_normal(mean=np.zeros(2)).logpdf(x).mean()
        assert nll.item() == pytest.approx(expected, abs=1e-10)


class TestClassifier:
    def test_one_hot(self):
        np.testing.assert_array_equal(one_hot(np.array([2, 0]), 3), [[0, 0, 1], [1, 0, 0]])

    def test_uniform_logits_cost_log_classes(self):
        xent = cross_entropy(Tensor(np.zeros((4, 5))), np.array([0, 1, 2, 4]))
        assert xent.item() == pytest.approx(math.log(5.0), abs=1e-14)

    def test_confident_correct_logits_cost_nothing(self):
        logits = np.full((2, 3), -50.0)
        logits[[0, 1], [1, 2]] = 50.0
        assert cross_entropy(Tensor(logits), np.array([1, 2])).item() == pytest.approx(0.0, abs=1e-12)

    def test_dropout_only_with_an_rng(self):
        model, registry = zeroed_model()
        registry.set("classifier.0.w", np.ones((1, 4)))
        tape = Tape(registry, recording=False)
        z = Tensor(np.ones((200, 2)))
        (deterministic,) = classifier_logits(model.classifier, z, tape)
        np.testing.assert_array_equal(deterministic.value, 1.0)
        (dropped,) = classifier_logits(model.classifier, z, tape, rng=SeedStream(5).generator("dropout"))
        assert set(np.unique(dropped.value)) == {0.0, 2.0}

    def test_predict_reads_the_supervised_block(self):
        model, registry = zeroed_model(classes=2)
        registry.set("classifier.0.w", np.array([[-1.0, 1.0]]))
        z = Tensor(np.array([[2.0, -9.0], [-2.0, 9.0]]))
        np.testing.assert_array_equal(predict(model, z, Tape(registry, recording=False)), [[1], [0]])


class TestObjective:
    def test_total_combines_terms(self):
        config = small_conditional_config("infocnf", classes=2, per_class=8)
        data = flow_dataset(config)
        registry = ParameterRegistry()
        bundle = build_flow(config, registry, SeedStream(0).generator("init"), data.class_counts)
        breakdown = conditional_loss(bundle.model, data.train_x, data.train_y, Tape(registry, recording=False), 0.25)
        assert breakdown.total.item() == pytest.approx(breakdown.nll_value + 0.25 * breakdown.xent_value)
        assert breakdown.xent_value == pytest.approx(math.log(2.0))
        assert len(breakdown.logits) == 1

    @pytest.mark.parametrize("task, loss", [("infocnf", infocnf_loss), ("ccnf", ccnf_loss)])
    def test_named_losses(self, task, loss):
        config = small_conditional_config(task, classes=2, per_class=8)
        data = flow_dataset(config)
        registry = ParameterRegistry()
        bundle = build_flow(config, registry, SeedStream(0).generator("init"), data.class_counts)
        tape = Tape(registry, recording=False)
        named = loss(bundle.model, data.train_x, data.train_y, tape, 0.5)
        direct = conditional_loss(bundle.model, data.train_x, data.train_y, tape, 0.5)
        assert named.total.item() == direct.total.item()

    def test_infocnf_conditions_fewer_parameters_than_ccnf(self):
        info, info_registry = zeroed_model("infocnf")
        full, full_registry = zeroed_model("ccnf")
        assert info.conditioning_parameter_count(info_registry) < full.conditioning_parameter_count(full_registry)
        assert info.partition.d_y == 1
        assert full.partition.d_y == 2

    def test_density_model_has_no_conditioning(self):
        config = small_conditional_config("density")
        registry = ParameterRegistry()
        bundle = build_flow(config, registry, SeedStream(0).generator("init"))
        assert bundle.model.conditioning_parameter_count(registry) == 0


class TestConditionalSample:
    def test_shifted_prior_moves_samples(self):
        model, registry = zeroed_model()
        prior_w = np.zeros((4, 2))
        prior_w[2, 0] = 3.0
        registry.set("prior.0.w", prior_w)
        draws = conditional_sample(model, 2, 4000, Tape(registry, recording=False), SeedStream(6).generator("s"))
        assert draws.shape == (4000, 2)
        assert draws[:, 0].mean() == pytest.approx(3.0, abs=0.1)
        assert draws[:, 1].mean() == pytest.approx(0.0, abs=0.1)

    def test_rejects_unknown_label(self):
        model, registry = zeroed_model()
        with pytest.raises(InvalidLabelException):
            conditional_sample(model, 7, 3, Tape(registry, recording=False), SeedStream(7).generator("s"))
