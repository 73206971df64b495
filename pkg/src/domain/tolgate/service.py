from __future__ import annotations

import math

from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from src.domain.condition.service import HALF_LOG_2PI
from src.domain.diffcore.tape import Tape
from src.domain.diffcore.tensor import Tensor, as_tensor
from src.domain.flow.values import FlowLayer
from src.domain.odesolve.values import SolverConfig, SolveStats
from src.domain.tolgate.entities import Baseline
from src.domain.tolgate.exceptions import EmptyBatchException, GateCountException
from src.domain.tolgate.values import LOG10_MAX, LOG10_MIN, GatePolicy, GateSample


def gate_feature_summary(batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim == 0 or batch.shape[0] == 0:
        raise EmptyBatchException()
    return batch.reshape(batch.shape[0], -1).mean(axis=0)


def tolerance_from_log10(value: float) -> float:
    return float(10.0 ** np.clip(value, LOG10_MIN, LOG10_MAX))


def policy_log_prob(value: float, mu: Tensor, log_sigma: Tensor) -> Tensor:
    """Log-density of the pre-clamp draw under N(mu, sigma^2); differentiable in mu and log sigma."""
    standardized = (Tensor(value) - mu) * (-log_sigma).exp()
    return standardized.square() * -0.5 - log_sigma - HALF_LOG_2PI


def gate_head(policy: GatePolicy, layer: int, summary: np.ndarray, tape: Tape) -> tuple[Tensor, Tensor]:
    out = policy.gates[layer].bind(tape)(Tensor(np.asarray(summary, dtype=np.float64)[None, :]))
    return out[0, 0], out[0, 1]


def sample_gate(
    policy: GatePolicy,
    layer: int,
    summary: np.ndarray,
    tape: Tape,
    rng: np.random.Generator | None,
) -> GateSample:
    """Draw one log10-tolerance for a layer; a None rng takes the policy mean."""
    mu, log_sigma = gate_head(policy, layer, summary, tape)
    sigma = math.exp(log_sigma.item())
    noise = 0.0 if rng is None else float(rng.standard_normal())
    value = mu.item() + sigma * noise
    return GateSample(
        layer=layer,
        mu=mu.item(),
        sigma=sigma,
        log10_tolerance=value,
        tolerance=tolerance_from_log10(value),
        log_prob=policy_log_prob(value, mu, log_sigma),
    )


def sample_tolerances(
    policy: GatePolicy,
    summaries: Sequence[np.ndarray],
    tape: Tape,
    rng: np.random.Generator | None,
) -> list[GateSample]:
    if len(summaries) != policy.num_layers:
        raise GateCountException(expected=policy.num_layers, received=len(summaries))
    return [sample_gate(policy, layer, summary, tape, rng) for layer, summary in enumerate(summaries)]


@dataclass
class GateController:
    """Solver selector that draws a tolerance for each layer from its gate as the layer input arrives."""

    policy: GatePolicy
    tape: Tape
    rng: np.random.Generator | None = None
    samples: list[GateSample] = field(default_factory=list)

    def __call__(self, layer: FlowLayer, layer_input: np.ndarray) -> SolverConfig:
        if layer.index >= self.policy.num_layers:
            raise GateCountException(expected=self.policy.num_layers, received=layer.index + 1)
        gate = sample_gate(self.policy, layer.index, gate_feature_summary(layer_input), self.tape, self.rng)
        self.samples.append(gate)
        return layer.solver.with_gate_tolerance(gate.tolerance)

    def attach_stats(self, stats: Sequence[SolveStats]) -> list[GateSample]:
        """Record R_i = -NFE_i of each layer's solve on its sample."""
        if len(stats) != len(self.samples):
            raise GateCountException(expected=len(self.samples), received=len(stats))
        self.samples = [replace(gate, nfe=item.nfe) for gate, item in zip(self.samples, stats)]
        return self.samples


def returns(loss: float, rewards: Sequence[float], alpha: float) -> np.ndarray:
    """r_i = -[L - (alpha / N) * sum_{j >= i} R_j], detached."""
    rewards = np.asarray(rewards, dtype=np.float64)
    if rewards.size == 0:
        raise GateCountException(expected=1, received=0)
    future = np.cumsum(rewards[::-1])[::-1]
    return -(float(loss) - (float(alpha) / rewards.size) * future)


def reinforce_surrogate(loss: Tensor, samples: Sequence[GateSample], advantages: Sequence[float]) -> Tensor:
    """L - sum_i log p(g_i | x) * adv_i; its gradient is the loss gradient plus the policy-gradient term."""
    if len(samples) != len(advantages):
        raise GateCountException(expected=len(samples), received=len(advantages))
    surrogate = as_tensor(loss)
    for gate, advantage in zip(samples, advantages):
        surrogate = surrogate - gate.log_prob * float(advantage)
    return surrogate


def gated_objective(
    loss: Tensor,
    samples: Sequence[GateSample],
    alpha: float,
    baseline: Baseline,
) -> tuple[Tensor, np.ndarray]:
    rewards = [gate.reward for gate in samples]
    layer_returns = returns(loss.item(), rewards, alpha)
    advantages = baseline.advantages(layer_returns)
    return reinforce_surrogate(loss, samples, advantages), layer_returns


def calibrate_alpha(loss: float, rewards: Sequence[float]) -> float:
    """alpha = 0.1 * |L0| * N / sum |R_i|, so the two terms start within an order of magnitude."""
    rewards = np.asarray(rewards, dtype=np.float64)
    total = float(np.abs(rewards).sum())
    if total == 0.0:
        return 0.0
    return 0.1 * abs(float(loss)) * rewards.size / total
