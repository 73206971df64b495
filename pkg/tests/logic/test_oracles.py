import math

import pytest

from src.domain.base.exceptions import DomainException
from src.logic.oracles import criteria_summary, registry, run_oracles
from src.logic.oracles.registry import CRITERIA, OracleOutcome, OracleRegistry, run_oracle

SLOW = {
    "condition.eval_tolerance_insensitivity",
    "condition.infocnf_gradient",
    "flow.hutchinson_unbiased",
    "flow.nfe_grows_with_precision",
    "latentode.elbo_gradient",
    "latentode.extrapolation_uses_prefix_only",
    "synthdata.spiral_statistics",
    "tolgate.reinforce_toy",
    "train.determinism_round_trip",
    "train.flow_normalization",
}


def suite_params():
    return [
        pytest.param(item.name, marks=pytest.mark.slow) if item.name in SLOW else item.name
        for item in registry.select()
    ]


@pytest.mark.parametrize("name", suite_params())
def test_oracle_passes(name):
    report = run_oracle(registry.oracles[name])
    assert report.passed, report.detail


def test_experiments_need_opting_in():
    names = [item.name for item in registry.select()]
    assert names == sorted(names)
    assert not any(name.startswith("experiment.") for name in names)
    assert any(item.is_experiment for item in registry.select(include_experiments=True))


def test_pattern_is_searched_in_names():
    assert {item.name for item in registry.select("adam")} == {"train.adam_first_step", "train.adam_convergence"}


def test_every_criterion_has_a_check():
    covered = {item.criterion for item in registry.select(include_experiments=True)}
    assert set(CRITERIA) - {"oracle-suite"} <= covered


def test_registration_rules():
    local = OracleRegistry()
    local.register("a.check")(lambda: OracleOutcome(1.0, 1.0, 0.0, True))
    with pytest.raises(KeyError):
        local.register("a.check")(lambda: OracleOutcome(1.0, 1.0, 0.0, True))
    with pytest.raises(KeyError):
        local.register("a.other", criterion="speed")


def test_raising_oracle_is_a_failure():
    local = OracleRegistry()

    @local.register("a.raises", criterion="normalization")
    def raises() -> OracleOutcome:
        raise DomainException()

    report = run_oracle(local.oracles["a.raises"])
    assert not report.passed
    assert math.isnan(report.measured)
    assert report.to_dict()["measured"] is None
    assert report.criterion == "normalization"


def test_criteria_summary():
    reports = run_oracles(r"^train\.adam")
    summary = {item["criterion"]: item for item in criteria_summary(reports)}
    assert set(summary) == set(CRITERIA)
    assert summary["oracle-suite"]["oracles"] == ["train.adam_convergence", "train.adam_first_step"]
    assert summary["oracle-suite"]["passed"]
    assert not summary["normalization"]["covered"]
    assert not summary["normalization"]["passed"]
