from __future__ import annotations

import numpy as np

from src.domain.diffcore.tape import ParameterRegistry, Tape
from src.domain.latentode.service import elbo, extrapolate
from src.domain.latentode.values import LatentOdeModel
from src.domain.odesolve.values import SolverConfig
from src.domain.synthdata.seeds import SeedStream
from src.domain.synthdata.service import gen_spiral_corpus
from src.domain.synthdata.values import SpiralCorpusSpec
from src.logic.oracles.checks import parameter_gradient_check, randomize, relative_error
from src.logic.oracles.registry import OracleOutcome, oracle

CHECKED_PARAMETERS = 20
SMALL_CORPUS = SpiralCorpusSpec(n_curves=4, curve_length=60, window=6, horizon=4)


def _small_model(seed: int) -> tuple[LatentOdeModel, ParameterRegistry]:
    stream = SeedStream(seed)
    registry = ParameterRegistry()
    model = LatentOdeModel.create(registry, stream.generator("oracle.latent.init"), hidden=8, units=8)
    randomize(registry, ("condition.", "supervise."), stream.generator("oracle.latent.heads"))
    return model, registry


@oracle("latentode.elbo_gradient", criterion="gradient-fidelity")
def elbo_gradient() -> OracleOutcome:
    model, registry = _small_model(61)
    batch = gen_spiral_corpus(SMALL_CORPUS, 61).batch()
    solver = SolverConfig(rtol=1e-10, atol=1e-10, max_steps=100000)
    positions = SeedStream(62).generator("oracle.latent.positions").choice(registry.size, CHECKED_PARAMETERS, replace=False)

    def loss(tape: Tape):
        return elbo(model, batch, tape, solver=solver).loss

    analytic, numeric = parameter_gradient_check(registry, loss, sorted(positions.tolist()))
    error = relative_error(analytic, numeric)
    return OracleOutcome(measured=error, expected=0.0, tolerance=1e-4, passed=error <= 1e-4)


@oracle("latentode.extrapolation_uses_prefix_only")
def extrapolation_uses_prefix_only() -> OracleOutcome:
    """Predictions depend on the observed window alone, never on the ground truth handed in for scoring."""
    model, registry = _small_model(63)
    corpus = gen_spiral_corpus(SMALL_CORPUS, 63)
    batch = corpus.batch()
    future_times, truth = corpus.future()
    tape = Tape(registry, recording=False)
    scored = extrapolate(model, batch, future_times, tape, truth=truth)
    blind = extrapolate(model, batch, future_times, tape)
    shifted = extrapolate(model, batch, future_times, tape, truth=truth + 5.0)
    same = np.array_equal(scored.predictions, blind.predictions) and np.array_equal(
        scored.predictions, shifted.predictions
    )
    return OracleOutcome(
        measured=float(scored.mse), expected="truth-independent predictions", tolerance="bitwise", passed=same
    )
