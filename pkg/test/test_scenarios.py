import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import pytest

from gauss_stein.errors import CutoffTooSmallError, InvalidArgumentError, ToleranceBreachError
from gauss_stein.models import OracleSettings
from gauss_stein.scenario_manager import ScenarioLibrary, default_cutoff, oracle_check


def test_library_lists_presets():
    assert ScenarioLibrary.get_available_scenarios(oracle_only=True) == [
        "coherent-small", "qi-small", "thermal-pair",
    ]
    assert {"low-noise", "bright-noise"} <= set(ScenarioLibrary.get_available_scenarios())
    low = ScenarioLibrary.get_scenario("low-noise")
    assert (low.n_s, low.n_b, low.eta, low.epsilon) == (10.0, 0.05, 0.1, 0.001)


def test_unknown_scenario():
    with pytest.raises(InvalidArgumentError, match="unknown scenario"):
        ScenarioLibrary.get_scenario("moonlight")


def test_invalid_scenario_file(tmp_path):
    path = tmp_path / "scenarios.yaml"
    path.write_text("scenarios:\n  broken:\n    kind: thermal\n    n_rho: 0.5\n")
    with pytest.raises(InvalidArgumentError, match="n_sigma"):
        ScenarioLibrary.load(str(path))


def test_default_cutoff():
    oracle = OracleSettings()
    assert default_cutoff(ScenarioLibrary.get_scenario("qi-small"), oracle) == 20
    assert default_cutoff(ScenarioLibrary.get_scenario("low-noise"), oracle) == oracle.multi_mode_cutoff


def test_oracle_check_thermal_pair():
    report = oracle_check("thermal-pair")
    assert report.passed
    assert report.cutoffs == [80, 160]
    assert report.stability_d <= 1e-7
    assert abs(report.formula_d - report.oracle_d) <= report.d_tol
    assert report.inputs == {"kind": "thermal", "epsilon": 0.001, "n_rho": 0.5, "n_sigma": 1.0}


def test_oracle_check_coherent():
    report = oracle_check("coherent-small")
    assert report.passed
    assert abs(report.formula_v - report.oracle_v) <= 1e-4


def test_oracle_check_rejects_large_parameters():
    with pytest.raises(InvalidArgumentError, match="whitelist"):
        oracle_check("low-noise")


def test_oracle_check_tiny_cutoff():
    with pytest.raises(CutoffTooSmallError):
        oracle_check("thermal-pair", cutoff=5)


def test_oracle_check_tolerance_breach():
    strict = OracleSettings(d_tol=1e-15, v_tol=1e-15)
    report = oracle_check("qi-small", oracle=strict, raise_on_breach=False)
    assert not report.passed
    assert report.d_tol == 1e-15
    with pytest.raises(ToleranceBreachError):
        oracle_check("qi-small", oracle=strict)
