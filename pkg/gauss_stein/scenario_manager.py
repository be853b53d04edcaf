import logging
import os
from typing import Dict, List, Optional

import yaml
from pydantic import ValidationError

from .divergence import divergences
from .errors import InvalidArgumentError, OracleUnreliableError, ToleranceBreachError
from .fock_oracle import build_scenario_dm, stability_check, thermal_pair_dm
from .illumination import hypothesis_pair
from .models import NumericsSettings, OracleReport, OracleSettings, Scenario
from .settings import get_numerics, get_oracle_settings, get_resource_path
from .states import thermal_state

logger = logging.getLogger(__name__)

SCENARIOS_FILE = "scenarios.yaml"


class ScenarioLibrary:
    """Loads and caches the named scenario presets."""
    _cache: Dict[str, Dict[str, Scenario]] = {}

    @classmethod
    def load(cls, path: Optional[str] = None) -> Dict[str, Scenario]:
        path = path or get_resource_path(SCENARIOS_FILE)
        if path not in cls._cache:
            if not os.path.exists(path):
                raise InvalidArgumentError(f"scenario file not found: {path}")
            logger.info("  -> Loading scenarios from %s", path)
            with open(path, "r") as f:
                raw = (yaml.safe_load(f) or {}).get("scenarios", {})
            try:
                cls._cache[path] = {
                    name: Scenario(name=name, **entry) for name, entry in raw.items()
                }
            except (TypeError, ValidationError) as e:
                raise InvalidArgumentError(f"{path}: invalid scenario entry: {e}") from e
            logger.debug("  -> %d scenarios cached", len(cls._cache[path]))
        return cls._cache[path]

    @classmethod
    def get_scenario(cls, name: str, path: Optional[str] = None) -> Scenario:
        scenarios = cls.load(path)
        if name not in scenarios:
            raise InvalidArgumentError(
                f"unknown scenario '{name}', available: {', '.join(sorted(scenarios))}"
            )
        return scenarios[name]

    @classmethod
    def get_available_scenarios(cls, oracle_only: bool = False, path: Optional[str] = None) -> List[str]:
        return sorted(
            name for name, s in cls.load(path).items() if s.oracle or not oracle_only
        )


def _formula_values(scenario: Scenario, numerics: NumericsSettings):
    if scenario.kind == "thermal":
        return divergences(thermal_state(scenario.n_rho), thermal_state(scenario.n_sigma), numerics)
    pair = hypothesis_pair(scenario.kind, scenario.illumination_params(), numerics)
    return divergences(pair.null_state, pair.alt_state, numerics)


def _builder(scenario: Scenario, oracle: OracleSettings):
    if scenario.kind == "thermal":
        return lambda d: thermal_pair_dm(scenario.n_rho, scenario.n_sigma, d, oracle)
    pair = hypothesis_pair(scenario.kind, scenario.illumination_params())
    return lambda d: build_scenario_dm(pair, d, oracle)


def default_cutoff(scenario: Scenario, oracle: OracleSettings) -> int:
    if scenario.cutoff is not None:
        return scenario.cutoff
    return oracle.multi_mode_cutoff if scenario.kind == "qi" else oracle.single_mode_cutoff


def oracle_check(name: str, cutoff: Optional[int] = None,
                 numerics: Optional[NumericsSettings] = None,
                 oracle: Optional[OracleSettings] = None,
                 raise_on_breach: bool = True) -> OracleReport:
    """Compares formula D, V with the Fock oracle for a whitelisted scenario."""
    numerics = get_numerics(numerics)
    oracle = get_oracle_settings(oracle)
    scenario = ScenarioLibrary.get_scenario(name)
    if not scenario.oracle:
        raise InvalidArgumentError(
            f"scenario '{name}' is outside the oracle whitelist: "
            f"{', '.join(ScenarioLibrary.get_available_scenarios(oracle_only=True))}"
        )
    cutoff = cutoff if cutoff is not None else default_cutoff(scenario, oracle)

    logger.info("--- Oracle check '%s' at cutoff %d ---", name, cutoff)
    formula_d, formula_v = _formula_values(scenario, numerics)
    check = stability_check(_builder(scenario, oracle), cutoff, oracle)
    rho, sigma, result = check["runs"][cutoff]
    rho2, sigma2, result2 = check["runs"][2 * cutoff]

    d_tol = scenario.d_tol if scenario.d_tol is not None else oracle.d_tol
    v_tol = scenario.v_tol if scenario.v_tol is not None else oracle.v_tol
    passed = (
        abs(formula_d - result.relative_entropy) <= d_tol
        and abs(formula_v - result.variance) <= v_tol
    )
    report = OracleReport(
        scenario=name,
        inputs=scenario.model_dump(exclude={"name", "description", "oracle", "cutoff", "d_tol", "v_tol"},
                                   exclude_none=True),
        cutoffs=[cutoff, 2 * cutoff],
        truncation_budget=oracle.truncation_budget,
        eig_floor=oracle.eig_floor,
        trace_deficits={
            str(cutoff): {"rho": rho.trace_deficit, "sigma": sigma.trace_deficit},
            str(2 * cutoff): {"rho": rho2.trace_deficit, "sigma": sigma2.trace_deficit},
        },
        clamp_counts={
            str(cutoff): {"rho": result.clamped_rho, "sigma": result.clamped_sigma},
            str(2 * cutoff): {"rho": result2.clamped_rho, "sigma": result2.clamped_sigma},
        },
        oracle_d=result.relative_entropy,
        oracle_v=result.variance,
        formula_d=formula_d,
        formula_v=formula_v,
        d_tol=d_tol,
        v_tol=v_tol,
        stability_d=check["stability_d"],
        stability_v=check["stability_v"],
        stability_tol=oracle.stability_tol,
        passed=passed,
    )
    logger.info("  -> formula D=%.10g V=%.10g, oracle D=%.10g V=%.10g",
                formula_d, formula_v, result.relative_entropy, result.variance)
    if max(report.stability_d, report.stability_v) > oracle.stability_tol:
        raise OracleUnreliableError(
            f"scenario '{name}': oracle not converged between cutoffs {cutoff} and {2 * cutoff} "
            f"(dD={report.stability_d:.3e}, dV={report.stability_v:.3e}, tol {oracle.stability_tol:g})"
        )
    if raise_on_breach and not passed:
        raise ToleranceBreachError(
            f"scenario '{name}': |dD|={abs(formula_d - result.relative_entropy):.3e} (tol {d_tol:g}), "
            f"|dV|={abs(formula_v - result.variance):.3e} (tol {v_tol:g})"
        )
    return report
