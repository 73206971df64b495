from __future__ import annotations

import math

import numpy as np

from src.domain.diffcore.tape import ParameterRegistry, Tape, backward
from src.domain.synthdata.seeds import SeedStream
from src.domain.tolgate.entities import Baseline
from src.domain.tolgate.service import policy_log_prob, returns, sample_gate
from src.domain.tolgate.values import GatePolicy
from src.logic.oracles.checks import within_standard_errors
from src.logic.oracles.registry import OracleOutcome, oracle

TOY_SAMPLES = 50_000
TOY_MU = -5.0
TOY_SIGMA = 0.5
# NFE of the toy solve grows like tolerance^(-1/5).
TOY_RATE = math.log(10.0) / 5.0


def _toy_nfe(log10_tolerance: np.ndarray) -> np.ndarray:
    return np.exp(-TOY_RATE * log10_tolerance)


def _toy_gradient() -> float:
    """d/dmu of E[-NFE(g)] for g ~ N(mu, sigma^2), from the log-normal mean."""
    return TOY_RATE * math.exp(-TOY_RATE * TOY_MU + 0.5 * (TOY_RATE * TOY_SIGMA) ** 2)


@oracle("tolgate.reinforce_toy", criterion="reinforce-correctness")
def reinforce_toy() -> OracleOutcome:
    registry = ParameterRegistry()
    registry.register("toy.mu", np.array([TOY_MU]))
    registry.register("toy.log_sigma", np.array([math.log(TOY_SIGMA)]))
    stream = SeedStream(41)
    draws = TOY_MU + TOY_SIGMA * stream.normal("oracle.reinforce.g", TOY_SAMPLES)
    rewards = -_toy_nfe(draws)
    layer_returns = np.array([returns(0.0, [reward], 1.0)[0] for reward in rewards])

    tape = Tape(registry)
    log_probs = policy_log_prob(draws, tape.param("toy.mu"), tape.param("toy.log_sigma"))
    estimate = float(backward(tape, (log_probs * layer_returns).mean())[0])

    score = (draws - TOY_MU) / TOY_SIGMA**2
    contributions = layer_returns * score
    _, se, within = within_standard_errors(contributions, _toy_gradient())
    baseline = Baseline(num_layers=1, decay=0.99)
    advantages = np.array([baseline.advantages(np.array([value]))[0] for value in layer_returns])
    variance_on = float(np.var(advantages * score))
    variance_off = float(np.var(contributions))
    consistent = abs(estimate - float(contributions.mean())) <= 1e-9 * max(1.0, abs(estimate))
    return OracleOutcome(
        measured=estimate,
        expected=_toy_gradient(),
        tolerance=3.0 * se,
        passed=within and consistent and variance_on < variance_off,
        detail=f"variance with baseline {variance_on:.4g}, without {variance_off:.4g}",
    )


@oracle("tolgate.tolerance_range")
def tolerance_range() -> OracleOutcome:
    """Every drawn tolerance lands in [1e-8, 1e-1], however far the policy mean drifts."""
    registry = ParameterRegistry()
    policy = GatePolicy.create(registry, 1, 2, 4, SeedStream(42).generator("oracle.gate.init"))
    rng = SeedStream(43).generator("oracle.gate.draws")
    summary = np.zeros(2)
    tolerances = []
    for mean in (-30.0, -5.0, 20.0):
        registry.set("gate.0.b1", np.array([mean, math.log(3.0)]))
        tape = Tape(registry, recording=False)
        tolerances.extend(sample_gate(policy, 0, summary, tape, rng).tolerance for _ in range(200))
    lo, hi = min(tolerances), max(tolerances)
    return OracleOutcome(
        measured=hi, expected="[1e-8, 1e-1]", tolerance="-", passed=lo >= 1e-8 and hi <= 1e-1,
        detail=f"range [{lo:.1e}, {hi:.1e}]",
    )
