from __future__ import annotations

import math

import numpy as np

from src.domain.condition.values import Classifier, ConditionalFlowModel, ConditionalPrior, LossBreakdown
from src.domain.diffcore.exceptions import ShapeMismatchException
from src.domain.diffcore.tape import Tape
from src.domain.diffcore.tensor import Tensor, as_tensor, concat
from src.domain.flow.service import SolverSelector, default_solver, forward_density, sample
from src.domain.flow.values import FlowPass

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def one_hot(labels: np.ndarray, classes: int) -> np.ndarray:
    encoded = np.zeros((len(labels), classes))
    encoded[np.arange(len(labels)), labels] = 1.0
    return encoded


def gaussian_log_prob(z: Tensor, mu: Tensor, log_sigma: Tensor) -> Tensor:
    """Diagonal Gaussian log-density summed over the last axis."""
    standardized = (as_tensor(z) - mu) * (-log_sigma).exp()
    return (standardized.square() * -0.5 - log_sigma - HALF_LOG_2PI).sum(axis=-1)


def standard_normal_log_prob(z: Tensor) -> Tensor:
    return (as_tensor(z).square() * -0.5 - HALF_LOG_2PI).sum(axis=-1)


def prior_parameters(prior: ConditionalPrior, tape: Tape, factor: int, labels: np.ndarray) -> tuple[Tensor, Tensor]:
    """(mu, log sigma) of one supervised block for a batch of labels of that factor."""
    width = prior.partition.factor_widths[factor]
    encoded = Tensor(one_hot(labels, prior.class_counts[factor]))
    raw = encoded @ tape.param(f"{prior.prefix}.{factor}.w") + tape.param(f"{prior.prefix}.{factor}.b")
    return raw[:, :width], raw[:, width:]


def conditional_log_prior(
    z: Tensor,
    labels: np.ndarray,
    model: ConditionalFlowModel,
    tape: Tape,
) -> Tensor:
    """log N(z_y; mu(y), sigma(y)^2) + log N(z_u; 0, I) per item, summed over label factors."""
    z = as_tensor(z)
    labels = model.check_labels(labels)
    partition = model.partition
    if z.shape[-1] != partition.d_total:
        raise ShapeMismatchException(op="conditional_log_prior", left=z.shape, right=(partition.d_total,))
    total = None
    for factor, block in enumerate(partition.blocks):
        mu, log_sigma = prior_parameters(model.prior, tape, factor, labels[:, factor])
        term = gaussian_log_prob(z[:, block], mu, log_sigma)
        total = term if total is None else total + term
    if partition.d_u:
        total = total + standard_normal_log_prob(z[:, partition.unsupervised])
    return total


def classifier_logits(
    classifier: Classifier,
    z: Tensor,
    tape: Tape,
    rng: np.random.Generator | None = None,
) -> list[Tensor]:
    """Logits per label factor; inverted dropout on the inputs only when an rng is supplied."""
    logits = []
    for factor, block in enumerate(classifier.partition.blocks):
        features = as_tensor(z)[:, block]
        if rng is not None and classifier.dropout > 0.0:
            keep = 1.0 - classifier.dropout
            mask = (rng.random(features.shape) < keep) / keep
            features = features * mask
        weight = tape.param(f"{classifier.prefix}.{factor}.w")
        bias = tape.param(f"{classifier.prefix}.{factor}.b")
        logits.append(features @ weight + bias)
    return logits


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    encoded = one_hot(labels, logits.shape[-1])
    return (logits.logsumexp(axis=-1) - (logits * encoded).sum(axis=-1)).mean()


def density_log_prob(flow: FlowPass) -> Tensor:
    return standard_normal_log_prob(flow.z) - flow.delta_logp


def density_loss(
    model: ConditionalFlowModel,
    x: np.ndarray,
    tape: Tape,
    solver_for: SolverSelector = default_solver,
    rng: np.random.Generator | None = None,
) -> LossBreakdown:
    flow = forward_density(model.stack, Tensor(x), tape, solver_for=solver_for, rng=rng)
    nll = -density_log_prob(flow).mean()
    zero = Tensor(0.0)
    return LossBreakdown(total=nll, nll=nll, xent=zero, flow=flow)


def conditional_loss(
    model: ConditionalFlowModel,
    x: np.ndarray,
    labels: np.ndarray,
    tape: Tape,
    beta: float,
    solver_for: SolverSelector = default_solver,
    rng: np.random.Generator | None = None,
    dropout_rng: np.random.Generator | None = None,
) -> LossBreakdown:
    """J = mean(-log p(x|y)) + beta * mean(cross-entropy of the classifier on the supervised code)."""
    labels = model.check_labels(labels)
    flow = forward_density(model.stack, Tensor(x), tape, solver_for=solver_for, rng=rng)
    log_px = conditional_log_prior(flow.z, labels, model, tape) - flow.delta_logp
    nll = -log_px.mean()
    logits = classifier_logits(model.classifier, flow.z, tape, rng=dropout_rng)
    xent = None
    for factor, factor_logits in enumerate(logits):
        term = cross_entropy(factor_logits, labels[:, factor])
        xent = term if xent is None else xent + term
    return LossBreakdown(
        total=nll + xent * float(beta),
        nll=nll,
        xent=xent,
        flow=flow,
        logits=tuple(item.value for item in logits),
    )


def infocnf_loss(model: ConditionalFlowModel, x, labels, tape: Tape, beta: float, **kwargs) -> LossBreakdown:
    return conditional_loss(model, x, labels, tape, beta, **kwargs)


def ccnf_loss(model: ConditionalFlowModel, x, labels, tape: Tape, beta: float, **kwargs) -> LossBreakdown:
    """The same objective with the partition covering the whole code."""
    return conditional_loss(model, x, labels, tape, beta, **kwargs)


def marginal_log_prob(
    model: ConditionalFlowModel,
    flow: FlowPass,
    tape: Tape,
    class_log_prior: np.ndarray | None = None,
) -> Tensor:
    """log sum_y p(x|y) p(y) per item over the first label factor, reusing one flow pass."""
    classes = model.class_counts[0]
    log_py = np.full(classes, -math.log(classes)) if class_log_prior is None else np.asarray(class_log_prior)
    n = flow.z.shape[0]
    columns = []
    for label in range(classes):
        labels = np.full((n, len(model.class_counts)), 0, dtype=np.int64)
        labels[:, 0] = label
        log_px_y = conditional_log_prior(flow.z, labels, model, tape) - flow.delta_logp
        columns.append((log_px_y + float(log_py[label]))[:, None])
    return concat(columns, axis=-1).logsumexp(axis=-1)


def marginal_nll(
    model: ConditionalFlowModel,
    x: np.ndarray,
    tape: Tape,
    class_log_prior: np.ndarray | None = None,
    solver_for: SolverSelector = default_solver,
    rng: np.random.Generator | None = None,
) -> Tensor:
    flow = forward_density(model.stack, Tensor(x), tape, solver_for=solver_for, rng=rng)
    return -marginal_log_prob(model, flow, tape, class_log_prior).mean()


def predict(model: ConditionalFlowModel, z: Tensor, tape: Tape) -> np.ndarray:
    """Deterministic class predictions (dropout disabled), one column per label factor."""
    logits = classifier_logits(model.classifier, z, tape)
    return np.stack([np.argmax(item.value, axis=-1) for item in logits], axis=-1)


def conditional_sample(
    model: ConditionalFlowModel,
    label: int | tuple[int, ...],
    n: int,
    tape: Tape,
    rng: np.random.Generator,
    solver_for: SolverSelector = default_solver,
) -> np.ndarray:
    """z_y ~ N(mu(y), sigma(y)^2), z_u ~ N(0, I), then the reverse flow."""
    factors = (label,) if isinstance(label, (int, np.integer)) else tuple(label)
    labels = model.check_labels(np.tile(np.asarray(factors, dtype=np.int64), (n, 1)))
    partition = model.partition
    z = rng.standard_normal((n, partition.d_total))
    for factor, block in enumerate(partition.blocks):
        mu, log_sigma = prior_parameters(model.prior, tape, factor, labels[:, factor])
        z[:, block] = mu.value + np.exp(log_sigma.value) * z[:, block]
    x, _ = sample(model.stack, Tensor(z), tape, solver_for=solver_for)
    return x.value
