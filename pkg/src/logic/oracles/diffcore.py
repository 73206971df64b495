from __future__ import annotations

import numpy as np

from src.domain.diffcore.mlp import Mlp
from src.domain.diffcore.tape import ParameterRegistry, Tape
from src.domain.diffcore.tensor import Tensor, concat
from src.domain.synthdata.seeds import SeedStream
from src.logic.oracles.checks import input_gradient_check, parameter_gradient_check, relative_error
from src.logic.oracles.registry import OracleOutcome, oracle

PRIMITIVE_CASES = {
    "add": lambda x: (x + x * 0.5).sum(),
    "sub": lambda x: (x - x.square()).sum(),
    "mul": lambda x: (x * x.tanh()).sum(),
    "matmul": lambda x: (x @ np.arange(12.0).reshape(4, 3) * 0.1).square().sum(),
    "softplus": lambda x: x.softplus().sum(),
    "tanh": lambda x: x.tanh().sum(),
    "exp": lambda x: x.exp().mean(),
    "log": lambda x: (x.square() + 1.0).log().sum(),
    "sqrt": lambda x: (x.square() + 1.0).sqrt().sum(),
    "mean": lambda x: x.mean(axis=0).square().sum(),
    "concat": lambda x: concat([x, x.exp()], axis=-1).square().sum(),
    "slice": lambda x: x[:, 1:3].square().sum(),
    "logsumexp": lambda x: x.logsumexp(axis=-1).sum(),
}


@oracle("diffcore.primitive_gradients", criterion="gradient-fidelity")
def primitive_gradients() -> OracleOutcome:
    x = SeedStream(11).normal("oracle.primitives", (3, 4))
    worst, name = 0.0, ""
    for op, fn in PRIMITIVE_CASES.items():
        analytic, numeric = input_gradient_check(fn, x)
        error = relative_error(analytic, numeric)
        if error > worst:
            worst, name = error, op
    return OracleOutcome(measured=worst, expected=0.0, tolerance=1e-6, passed=worst <= 1e-6, detail=f"worst op {name}")


@oracle("diffcore.mlp_gradient", criterion="gradient-fidelity")
def mlp_gradient() -> OracleOutcome:
    stream = SeedStream(12)
    registry = ParameterRegistry()
    net = Mlp.create(registry, "net", (3, 8, 2), stream.generator("oracle.mlp.init"), activation="tanh")
    x = stream.normal("oracle.mlp.x", (5, 3))

    def loss(tape: Tape) -> Tensor:
        return net.bind(tape)(Tensor(x)).square().sum()

    analytic, numeric = parameter_gradient_check(registry, loss)
    error = relative_error(analytic, numeric)
    return OracleOutcome(measured=error, expected=0.0, tolerance=1e-6, passed=error <= 1e-6)
