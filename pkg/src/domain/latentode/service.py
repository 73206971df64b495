from __future__ import annotations

import math

import numpy as np

from src.domain.condition.service import cross_entropy
from src.domain.diffcore.tape import Tape
from src.domain.diffcore.tensor import Tensor, as_tensor, concat
from src.domain.latentode.exceptions import SequenceShapeException, SpiralDomainException
from src.domain.latentode.values import (
    ElboBreakdown,
    ExtrapolationResult,
    LatentOdeModel,
    SpiralBatch,
    SpiralSystem,
)
from src.domain.odesolve.service import integrate_grid
from src.domain.odesolve.values import SolverConfig, SolveStats

OBSERVATION_NOISE = 0.3
CLOCKWISE_OFFSET = -5.0
COUNTER_CLOCKWISE_OFFSET = 5.0


def gen_spiral(system: SpiralSystem, t):
    """Spiral coordinates at time(s) t; accepts scalars or arrays."""
    t_array = np.asarray(t, dtype=np.float64)
    if system.direction == "clockwise":
        if np.any(t_array <= 0):
            raise SpiralDomainException(t=float(np.min(t_array)))
        radius = system.a + system.b * (50.0 / t_array)
        x = radius * np.cos(t_array) + CLOCKWISE_OFFSET
    else:
        radius = system.a + system.b * t_array
        x = radius * np.cos(t_array) + COUNTER_CLOCKWISE_OFFSET
    y = radius * np.sin(t_array)
    if t_array.ndim == 0:
        return float(x), float(y)
    return x, y


def encode(model: LatentOdeModel, batch: SpiralBatch, tape: Tape) -> tuple[Tensor, Tensor]:
    """Tanh recurrence over [x, y, t] in reverse time, then a linear head to (mu0, log sigma0)."""
    wx, wh, b = tape.param("encoder.wx"), tape.param("encoder.wh"), tape.param("encoder.b")
    h = Tensor(np.zeros((batch.size, model.hidden)))
    for step in range(batch.times.size - 1, -1, -1):
        time_column = np.full((batch.size, 1), batch.times[step])
        inputs = Tensor(np.concatenate([batch.points[:, step, :], time_column], axis=-1))
        h = (inputs @ wx + h @ wh + b).tanh()
    head = h @ tape.param("encoder.head.w") + tape.param("encoder.head.b")
    width = model.latent_width
    return head[:, :width], head[:, width:]


def latent_prior(model: LatentOdeModel, tape: Tape, label_features: np.ndarray | None, size: int):
    """(mu, log sigma) of the prior on z0; the supervised block comes from q_phi when partitioned."""
    zeros = np.zeros((size, model.latent_width))
    if not model.partitioned:
        return Tensor(zeros), Tensor(zeros)
    raw = Tensor(label_features) @ tape.param("condition.w") + tape.param("condition.b")
    width = model.supervised_width
    rest = Tensor(zeros[:, width:])
    return concat([raw[:, :width], rest], axis=-1), concat([raw[:, width:], rest], axis=-1)


def gaussian_kl(mu_q: Tensor, log_sigma_q: Tensor, mu_p: Tensor, log_sigma_p: Tensor) -> Tensor:
    """KL(N(mu_q, sigma_q^2) || N(mu_p, sigma_p^2)) per item, summed over the last axis."""
    variance_ratio = (log_sigma_q - log_sigma_p).exp().square()
    mean_term = ((mu_q - mu_p) * (-log_sigma_p).exp()).square()
    return ((variance_ratio + mean_term) * 0.5 - (log_sigma_q - log_sigma_p) - 0.5).sum(axis=-1)


def decode_trajectory(
    model: LatentOdeModel,
    z0: Tensor,
    times: np.ndarray,
    tape: Tape,
    solver: SolverConfig = SolverConfig(),
) -> tuple[list[Tensor], SolveStats]:
    """Latent trajectory from z0 at times[0] over the grid, decoded to 2D points."""
    dynamics = model.dynamics.bind(tape)
    decoder = model.decoder.bind(tape)
    states, stats = integrate_grid(dynamics, z0, times, solver)
    return [decoder(state) for state in states], stats


def reconstruction_log_likelihood(decoded: list[Tensor], points: np.ndarray, sigma_obs: float) -> Tensor:
    """Sum over time of log N(point; decoded, sigma_obs^2 I) per sequence."""
    normalizer = math.log(2.0 * math.pi * sigma_obs**2) * points.shape[-1] / 2.0
    total = None
    for step, prediction in enumerate(decoded):
        residual = prediction - points[:, step, :]
        term = residual.square().sum(axis=-1) * (-0.5 / sigma_obs**2) - normalizer
        total = term if total is None else total + term
    return total


def supervision_loss(model: LatentOdeModel, z_y: Tensor, batch: SpiralBatch, tape: Tape) -> Tensor:
    """MSE of q_theta(z_y) against (a, b) plus cross-entropy against the direction."""
    out = z_y @ tape.param("supervise.w") + tape.param("supervise.b")
    targets = batch.label_features()[:, :2]
    mse = (out[:, :2] - targets).square().sum(axis=-1).mean()
    return mse + cross_entropy(out[:, 2:], batch.direction_labels())


def elbo(
    model: LatentOdeModel,
    batch: SpiralBatch,
    tape: Tape,
    beta_sup: float = 1.0,
    sigma_obs: float = OBSERVATION_NOISE,
    rng: np.random.Generator | None = None,
    solver: SolverConfig = SolverConfig(),
) -> ElboBreakdown:
    """Negative ELBO averaged over the batch, plus beta_sup times the supervised term when partitioned.

    One reparameterized draw of z0 per sequence when an rng is given, the posterior mean otherwise.
    """
    if sigma_obs <= 0:
        raise SequenceShapeException(detail=f"observation noise must be positive, got {sigma_obs}")
    mu0, log_sigma0 = encode(model, batch, tape)
    if rng is None:
        z0 = mu0
    else:
        z0 = mu0 + log_sigma0.exp() * rng.standard_normal(mu0.shape)
    decoded, stats = decode_trajectory(model, z0, batch.times, tape, solver)
    recon = reconstruction_log_likelihood(decoded, batch.points, sigma_obs).mean()
    features = batch.label_features() if model.partitioned else None
    mu_p, log_sigma_p = latent_prior(model, tape, features, batch.size)
    kl = gaussian_kl(mu0, log_sigma0, mu_p, log_sigma_p).mean()
    loss = kl - recon
    sup = None
    if model.partitioned:
        sup = supervision_loss(model, z0[:, : model.supervised_width], batch, tape)
        loss = loss + sup * float(beta_sup)
    return ElboBreakdown(loss=loss, recon=recon, kl=kl, sup=sup, stats=stats)


def _future_grid(future_times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    future = np.asarray(future_times, dtype=np.float64)
    if future.ndim != 1 or future.size == 0 or np.any(future < 0):
        raise SequenceShapeException(detail="future times must be a nonempty list of offsets from the prefix start")
    grid = np.unique(np.concatenate([[0.0], future]))
    return grid, np.searchsorted(grid, future)


def extrapolate(
    model: LatentOdeModel,
    prefix: SpiralBatch,
    future_times: np.ndarray,
    tape: Tape,
    truth: np.ndarray | None = None,
    solver: SolverConfig = SolverConfig(),
) -> ExtrapolationResult:
    """Encode the prefix, integrate the posterior mean to the future times and decode.

    Times are offsets from the first prefix observation. With ground truth and a partitioned
    model, a second prediction replaces z_y by the conditional prior mean of the true labels.
    """
    grid, positions = _future_grid(future_times)
    mu0, _ = encode(model, prefix, tape)
    predictions, stats = _predict(model, mu0, grid, positions, tape, solver)
    result = ExtrapolationResult(predictions=predictions, stats=stats)
    if truth is None:
        return result
    truth = np.asarray(truth, dtype=np.float64)
    if truth.shape != predictions.shape:
        raise SequenceShapeException(detail=f"truth of shape {truth.shape} does not match {predictions.shape}")
    mse = float(np.mean(np.square(predictions - truth)))
    conditioned_mse = None
    if model.partitioned and prefix.systems:
        mu_p, _ = latent_prior(model, tape, prefix.label_features(), prefix.size)
        width = model.supervised_width
        z0 = concat([mu_p[:, :width], mu0[:, width:]], axis=-1)
        conditioned, more = _predict(model, z0, grid, positions, tape, solver)
        conditioned_mse = float(np.mean(np.square(conditioned - truth)))
        stats = stats + more
    return ExtrapolationResult(predictions=predictions, mse=mse, conditioned_mse=conditioned_mse, stats=stats)


def _predict(
    model: LatentOdeModel,
    z0: Tensor,
    grid: np.ndarray,
    positions: np.ndarray,
    tape: Tape,
    solver: SolverConfig,
) -> tuple[np.ndarray, SolveStats]:
    if grid.size == 1:
        decoded, stats = [model.decoder.bind(tape)(as_tensor(z0))], SolveStats()
    else:
        decoded, stats = decode_trajectory(model, z0, grid, tape, solver)
    values = np.stack([item.value for item in decoded], axis=1)
    return values[:, positions, :], stats


def predict_labels(model: LatentOdeModel, batch: SpiralBatch, tape: Tape) -> tuple[np.ndarray, np.ndarray]:
    """q_theta on the posterior-mean supervised block: predicted (a, b) and direction index."""
    mu0, _ = encode(model, batch, tape)
    out = mu0[:, : model.supervised_width] @ tape.param("supervise.w") + tape.param("supervise.b")
    return out.value[:, :2], np.argmax(out.value[:, 2:], axis=-1)
