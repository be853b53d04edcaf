"""Quantum illumination: coherent-state vs two-mode-squeezed-vacuum transmitters.

The null hypothesis is "no target": the return mode is thermal with N_B photons.
Under the alternative the return mixes the signal with a bath of
N_B / (1 - eta) photons on a beamsplitter of transmissivity eta. For the
entangled transmitter mode 1 is the return and mode 2 the idler.
"""
import asyncio
import logging
import math
from typing import Iterable, List, Literal, Optional, Sequence, Tuple

import pandas as pd
from pydantic import ValidationError, model_validator

from .errors import InvalidArgumentError
from .models import FrozenArrayModel, IlluminationParams, NumericsSettings, StandardFormParams
from .settings import get_numerics
from .states import GaussianState, displaced_thermal, from_standard_form, require_valid, thermal_state
from .divergence import divergences
from .stein import exponent_curve, inverse_normal_cdf

logger = logging.getLogger(__name__)

Transmitter = Literal["coherent", "qi"]
TRANSMITTERS: Tuple[str, ...] = ("coherent", "qi")
SWEEP_COLUMNS = ["transmitter", "n_s", "n_b", "eta", "epsilon", "M", "D", "V", "R_first", "R_second"]


class HypothesisPair(FrozenArrayModel):
    null_state: GaussianState
    alt_state: GaussianState
    transmitter: Transmitter
    params: IlluminationParams

    @model_validator(mode="after")
    def _same_modes(self):
        if self.null_state.n_modes != self.alt_state.n_modes:
            raise ValueError("null and alternative states must have the same number of modes")
        return self


def illumination_params(n_s: float, n_b: float, eta: float, epsilon: float = 0.001) -> IlluminationParams:
    try:
        return IlluminationParams(n_s=n_s, n_b=n_b, eta=eta, epsilon=epsilon)
    except ValidationError as e:
        raise InvalidArgumentError(f"invalid illumination parameters: {e}") from e


def coherent_pair(p: IlluminationParams, settings: Optional[NumericsSettings] = None) -> HypothesisPair:
    null = thermal_state(p.n_b)
    alt = displaced_thermal(math.sqrt(2.0 * p.eta * p.n_s), 0.0, p.n_b)
    return HypothesisPair(
        null_state=require_valid(null, settings),
        alt_state=require_valid(alt, settings),
        transmitter="coherent",
        params=p,
    )


def _require_lossy(p: IlluminationParams, what: str):
    # the target-present bath N_B/(1-eta) only exists for eta < 1
    if p.eta >= 1.0:
        raise InvalidArgumentError(f"{what} needs 0 < eta < 1, got eta={p.eta}")


def qi_standard_forms(p: IlluminationParams) -> Tuple[StandardFormParams, StandardFormParams]:
    """(null, alternative) standard-form triples; a = return, b = idler."""
    _require_lossy(p, "the entangled transmitter")
    mu = p.n_s + 0.5
    c_tmsv = math.sqrt(p.n_s * (p.n_s + 1.0))
    kappa = p.eta * p.n_s + p.n_b + 0.5
    null = StandardFormParams(a=p.n_b + 0.5, b=mu, c=0.0)
    alt = StandardFormParams(a=kappa, b=mu, c=math.sqrt(p.eta) * c_tmsv)
    return null, alt


def qi_pair(p: IlluminationParams, settings: Optional[NumericsSettings] = None) -> HypothesisPair:
    null_p, alt_p = qi_standard_forms(p)
    return HypothesisPair(
        null_state=require_valid(from_standard_form(null_p), settings),
        alt_state=require_valid(from_standard_form(alt_p), settings),
        transmitter="qi",
        params=p,
    )


def hypothesis_pair(transmitter: str, p: IlluminationParams,
                    settings: Optional[NumericsSettings] = None) -> HypothesisPair:
    if transmitter == "coherent":
        return coherent_pair(p, settings)
    if transmitter == "qi":
        return qi_pair(p, settings)
    raise InvalidArgumentError(f"unknown transmitter '{transmitter}', expected one of {TRANSMITTERS}")


# --- Closed forms and expansions ---
def coherent_closed_form(p: IlluminationParams) -> Tuple[float, float]:
    log_term = math.log1p(1.0 / p.n_b)
    D = p.eta * p.n_s * log_term
    V = p.eta * p.n_s * (2.0 * p.n_b + 1.0) * log_term**2
    return D, V


def qi_leading_order_ns(p: IlluminationParams) -> Tuple[float, float]:
    """Leading terms for N_S -> infinity: D + O(1), V + O(N_S)."""
    _require_lossy(p, "the large-N_S expansion")
    D = p.eta * p.n_s / (1.0 - p.eta) * math.log1p((1.0 - p.eta) / p.n_b)
    return D, D * D


def qi_leading_order_nb(p: IlluminationParams) -> Tuple[float, float]:
    """Leading terms for N_B -> infinity, both up to O(1/N_B^2)."""
    _require_lossy(p, "the large-N_B expansion")
    if p.n_s <= 0:
        raise InvalidArgumentError("the large-N_B expansion needs N_S > 0")
    log_term = math.log1p(1.0 / p.n_s)
    scale = p.eta * p.n_s * (p.n_s + 1.0) / p.n_b
    return scale * log_term, scale * (2.0 * p.n_s + 1.0) * log_term**2


def exact_divergences(pair: HypothesisPair, settings: Optional[NumericsSettings] = None) -> Tuple[float, float]:
    return divergences(pair.null_state, pair.alt_state, get_numerics(settings))


# --- Sweeps ---
def _transmitter_rows(transmitter: str, p: IlluminationParams, M_grid: Sequence[int],
                      settings: NumericsSettings) -> List[dict]:
    D, V = exact_divergences(hypothesis_pair(transmitter, p, settings), settings)
    return [
        {
            "transmitter": transmitter,
            "n_s": p.n_s,
            "n_b": p.n_b,
            "eta": p.eta,
            "epsilon": p.epsilon,
            "M": pt.trials,
            "D": D,
            "V": V,
            "R_first": pt.r_first,
            "R_second": pt.r_second,
        }
        for pt in exponent_curve(D, V, p.epsilon, M_grid, settings)
    ]


async def sweep_async(params_list: Iterable[IlluminationParams], M_grid: Sequence[int],
                      transmitters: Sequence[str] = TRANSMITTERS, workers: int = 4,
                      settings: Optional[NumericsSettings] = None) -> pd.DataFrame:
    """Evaluates every (transmitter, params) point concurrently; rows come back in grid order."""
    settings = get_numerics(settings)
    params_list = list(params_list)
    for t in transmitters:
        if t not in TRANSMITTERS:
            raise InvalidArgumentError(f"unknown transmitter '{t}', expected one of {TRANSMITTERS}")
    jobs = [(t, p) for t in sorted(set(transmitters)) for p in params_list]
    total = len(jobs)
    logger.info("--- Sweeping %d grid points with %d workers ---", total, workers)

    semaphore = asyncio.Semaphore(max(1, workers))
    completed = 0

    async def worker(job):
        nonlocal completed
        transmitter, p = job
        async with semaphore:
            rows = await asyncio.to_thread(_transmitter_rows, transmitter, p, M_grid, settings)
            completed += 1
            logger.debug("  -> [%d/%d] %s at %s", completed, total, transmitter, p.model_dump())
            return rows

    results = await asyncio.gather(*(worker(job) for job in jobs))
    frame = pd.DataFrame([row for rows in results for row in rows], columns=SWEEP_COLUMNS)
    return frame.sort_values(["transmitter", "n_s", "n_b", "eta", "M"], kind="mergesort").reset_index(drop=True)


def comparison_sweep(p: IlluminationParams, M_grid: Sequence[int],
                     transmitters: Sequence[str] = TRANSMITTERS, workers: int = 2,
                     settings: Optional[NumericsSettings] = None) -> pd.DataFrame:
    """Rows (transmitter, M) with exact D, V and both exponent orders."""
    return asyncio.run(sweep_async([p], M_grid, transmitters, workers, settings))


def advantage_table(params_list: Iterable[IlluminationParams], workers: int = 4,
                    settings: Optional[NumericsSettings] = None) -> pd.DataFrame:
    """D and V of both transmitters per parameter set, with the QI/coherent D ratio."""
    params_list = list(params_list)
    frame = asyncio.run(sweep_async(params_list, [1], TRANSMITTERS, workers, settings))
    wide = frame.pivot_table(index=["n_s", "n_b", "eta"], columns="transmitter", values=["D", "V"])
    wide.columns = [f"{value}_{transmitter}" for value, transmitter in wide.columns]
    wide = wide.reset_index()
    wide["D_ratio"] = wide["D_qi"] / wide["D_coherent"]
    return wide


def crossover_trials(p: IlluminationParams, m_max: int = 1_000_000,
                     settings: Optional[NumericsSettings] = None) -> Optional[int]:
    """Smallest M at which the QI second-order exponent beats the coherent first-order one.

    Returns None when QI has no first-order advantage or the crossing lies beyond m_max.
    """
    settings = get_numerics(settings)
    d_coh, _ = exact_divergences(coherent_pair(p, settings), settings)
    d_qi, v_qi = exact_divergences(qi_pair(p, settings), settings)
    if d_qi <= d_coh:
        return None
    z = inverse_normal_cdf(p.epsilon)
    if z >= 0.0 or v_qi <= 0.0:
        return 1
    bound = v_qi * z * z / (d_qi - d_coh) ** 2
    m_star = max(1, math.floor(bound) + 1)
    logger.debug("  -> crossover bound %.6g, M*=%d", bound, m_star)
    return m_star if m_star <= m_max else None
