"""Brute-force cross-check in a truncated Fock basis.

States are built operationally (thermal mixtures, displacement, two-mode
squeezing, a beamsplitter against a thermal bath) and D, V follow from direct
eigendecompositions of the density matrices. Multi-mode operators use the
Kronecker ordering mode 0 (x) mode 1 (x) ...
"""
import functools
import logging
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from pydantic import Field
from scipy import linalg, special

from .errors import CutoffTooSmallError, InvalidArgumentError, OracleUnreliableError
from .models import FrozenArrayModel, OracleResult, OracleSettings
from .settings import get_oracle_settings

logger = logging.getLogger(__name__)


class FockOperator(FrozenArrayModel):
    cutoff_per_mode: int = Field(..., ge=2)
    n_modes: int = Field(..., ge=1)
    matrix: np.ndarray
    trace_deficit: float = 0.0


def _check_cutoff(cutoff) -> int:
    if isinstance(cutoff, bool) or int(cutoff) != cutoff or cutoff < 2:
        raise InvalidArgumentError(f"cutoff must be an integer >= 2, got {cutoff!r}")
    return int(cutoff)


@functools.lru_cache(maxsize=32)
def _ladder(cutoff: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1)
    a.flags.writeable = False
    return a


def annihilation(cutoff: int) -> FockOperator:
    cutoff = _check_cutoff(cutoff)
    return FockOperator(cutoff_per_mode=cutoff, n_modes=1, matrix=np.array(_ladder(cutoff)))


def quadratures(cutoff: int) -> Tuple[FockOperator, FockOperator]:
    """q = (a + a^dagger)/sqrt 2, p = -i (a - a^dagger)/sqrt 2."""
    a = annihilation(cutoff).matrix
    q = (a + a.conj().T) / np.sqrt(2.0)
    p = -1j * (a - a.conj().T) / np.sqrt(2.0)
    return (
        FockOperator(cutoff_per_mode=cutoff, n_modes=1, matrix=q),
        FockOperator(cutoff_per_mode=cutoff, n_modes=1, matrix=p),
    )


def number_operator(cutoff: int) -> FockOperator:
    cutoff = _check_cutoff(cutoff)
    return FockOperator(cutoff_per_mode=cutoff, n_modes=1, matrix=np.diag(np.arange(cutoff, dtype=complex)))


def embed(op: np.ndarray, mode: int, n_modes: int) -> np.ndarray:
    """Lifts a single-mode operator onto `mode` of an n-mode register."""
    eye = np.eye(op.shape[0])
    out = np.ones((1, 1))
    for k in range(n_modes):
        out = np.kron(out, op if k == mode else eye)
    return out


def _thermal_weights(n_mean: float, cutoff: int, settings: OracleSettings, what: str) -> Tuple[np.ndarray, float]:
    if n_mean < 0:
        raise InvalidArgumentError(f"{what}: n_mean must be >= 0, got {n_mean}")
    if n_mean == 0:
        weights = np.zeros(cutoff)
        weights[0] = 1.0
        return weights, 0.0
    ratio = n_mean / (n_mean + 1.0)
    deficit = ratio**cutoff
    if deficit > settings.truncation_budget:
        raise CutoffTooSmallError(
            f"{what}: thermal tail {deficit:.3e} beyond cutoff {cutoff} exceeds the "
            f"truncation budget {settings.truncation_budget:g}"
        )
    weights = ratio ** np.arange(cutoff) / (n_mean + 1.0)
    return weights / weights.sum(), float(deficit)


def thermal_dm(n_mean: float, cutoff: int, settings: Optional[OracleSettings] = None) -> FockOperator:
    settings = get_oracle_settings(settings)
    cutoff = _check_cutoff(cutoff)
    weights, deficit = _thermal_weights(float(n_mean), cutoff, settings, "thermal state")
    return FockOperator(cutoff_per_mode=cutoff, n_modes=1, matrix=np.diag(weights).astype(complex),
                        trace_deficit=deficit)


# --- Unitaries ---
def displacement(alpha: complex, cutoff: int) -> FockOperator:
    a = annihilation(cutoff).matrix
    return FockOperator(cutoff_per_mode=cutoff, n_modes=1,
                        matrix=linalg.expm(alpha * a.conj().T - np.conj(alpha) * a))


def two_mode_squeezer(r: float, cutoff: int) -> FockOperator:
    """exp(r (a^dagger b^dagger - a b)); maps |00> to a state with sinh^2 r photons per mode."""
    a = annihilation(cutoff).matrix
    a1, a2 = embed(a, 0, 2), embed(a, 1, 2)
    gen = r * (a1.conj().T @ a2.conj().T - a1 @ a2)
    return FockOperator(cutoff_per_mode=cutoff, n_modes=2, matrix=linalg.expm(gen))


def beamsplitter(eta: float, cutoff: int) -> FockOperator:
    """a_0 -> sqrt(eta) a_0 + sqrt(1-eta) a_1 in the Heisenberg picture."""
    if not 0.0 <= eta <= 1.0:
        raise InvalidArgumentError(f"eta must lie in [0, 1], got {eta}")
    theta = np.arccos(np.sqrt(eta))
    a = annihilation(cutoff).matrix
    a1, a2 = embed(a, 0, 2), embed(a, 1, 2)
    gen = theta * (a1.conj().T @ a2 - a1 @ a2.conj().T)
    return FockOperator(cutoff_per_mode=cutoff, n_modes=2, matrix=linalg.expm(gen))


def tmsv_vector(n_s: float, cutoff: int, settings: Optional[OracleSettings] = None) -> Tuple[np.ndarray, float]:
    """TMSV amplitudes as a (signal, idler) array, plus the analytic tail weight."""
    settings = get_oracle_settings(settings)
    cutoff = _check_cutoff(cutoff)
    deficit = (n_s / (n_s + 1.0)) ** cutoff if n_s > 0 else 0.0
    if deficit > settings.truncation_budget:
        raise CutoffTooSmallError(
            f"two-mode squeezed vacuum: tail {deficit:.3e} beyond cutoff {cutoff} exceeds "
            f"the truncation budget {settings.truncation_budget:g}"
        )
    r = np.arcsinh(np.sqrt(n_s))
    psi = two_mode_squeezer(r, cutoff).matrix[:, 0]
    return psi.reshape(cutoff, cutoff), float(deficit)


# --- Scenario density matrices ---
def edge_population(dm: np.ndarray, n_modes: int, cutoff: int) -> float:
    """Largest marginal population of the top retained Fock level over all modes."""
    diag = np.real(np.diag(dm)).reshape((cutoff,) * n_modes)
    worst = 0.0
    for mode in range(n_modes):
        worst = max(worst, float(np.take(diag, cutoff - 1, axis=mode).sum()))
    return worst


def _finish(matrix: np.ndarray, n_modes: int, cutoff: int, deficit: float,
            settings: OracleSettings, what: str) -> FockOperator:
    matrix = 0.5 * (matrix + matrix.conj().T)
    trace = float(np.real(np.trace(matrix)))
    edge = edge_population(matrix, n_modes, cutoff)
    deficit = max(deficit, abs(1.0 - trace), edge)
    if deficit > settings.truncation_budget:
        raise CutoffTooSmallError(
            f"{what}: truncation residual {deficit:.3e} at cutoff {cutoff} exceeds the "
            f"truncation budget {settings.truncation_budget:g}"
        )
    return FockOperator(cutoff_per_mode=cutoff, n_modes=n_modes, matrix=matrix / trace,
                        trace_deficit=deficit)


def thermal_pair_dm(n_rho: float, n_sigma: float, cutoff: int,
                    settings: Optional[OracleSettings] = None) -> Tuple[FockOperator, FockOperator]:
    settings = get_oracle_settings(settings)
    return thermal_dm(n_rho, cutoff, settings), thermal_dm(n_sigma, cutoff, settings)


def coherent_dm(n_s: float, n_b: float, eta: float, cutoff: int,
                settings: Optional[OracleSettings] = None) -> Tuple[FockOperator, FockOperator]:
    """Thermal noise, and the same noise displaced by alpha = sqrt(eta n_s)."""
    settings = get_oracle_settings(settings)
    rho = thermal_dm(n_b, cutoff, settings)
    shift = displacement(np.sqrt(eta * n_s), cutoff).matrix
    sigma = shift @ rho.matrix @ shift.conj().T
    return rho, _finish(sigma, 1, cutoff, rho.trace_deficit, settings, "displaced thermal state")


def qi_dm(n_s: float, n_b: float, eta: float, cutoff: int,
          settings: Optional[OracleSettings] = None) -> Tuple[FockOperator, FockOperator]:
    """(return (x) idler) states: no target, and TMSV signal mixed with a thermal bath."""
    settings = get_oracle_settings(settings)
    if not 0.0 < eta < 1.0:
        raise InvalidArgumentError(f"the entangled transmitter needs 0 < eta < 1, got {eta}")
    d = _check_cutoff(cutoff)
    psi, psi_deficit = tmsv_vector(n_s, d, settings)

    idler = psi.T @ psi.conj()
    noise = thermal_dm(n_b, d, settings)
    rho = _finish(np.kron(noise.matrix, idler), 2, d, max(noise.trace_deficit, psi_deficit),
                  settings, "no-target state")

    bath, bath_deficit = _thermal_weights(n_b / (1.0 - eta), d, settings, "bath")
    mixer = beamsplitter(eta, d).matrix.reshape(d, d, d, d)  # [signal', bath', signal, bath]
    columns = []
    for k, weight in enumerate(bath):
        if weight == 0.0:
            continue
        # signal mixed with bath Fock state |k>, laid out as (return, idler) x bath
        phi = np.einsum("xys,si->xiy", mixer[:, :, :, k], psi)
        columns.append(np.sqrt(weight) * phi.reshape(d * d, d))
    amplitudes = np.concatenate(columns, axis=1)
    sigma = _finish(amplitudes @ amplitudes.conj().T, 2, d, max(psi_deficit, bath_deficit),
                    settings, "target-present state")
    logger.debug("  -> qi oracle states at cutoff %d: deficits %.3e / %.3e",
                 d, rho.trace_deficit, sigma.trace_deficit)
    return rho, sigma


def build_scenario_dm(pair, cutoff: int, settings: Optional[OracleSettings] = None) -> Tuple[FockOperator, FockOperator]:
    """Oracle density matrices for an illumination HypothesisPair."""
    p = pair.params
    if pair.transmitter == "coherent":
        return coherent_dm(p.n_s, p.n_b, p.eta, cutoff, settings)
    return qi_dm(p.n_s, p.n_b, p.eta, cutoff, settings)


# --- Moments ---
def extract_moments(dm: FockOperator) -> Tuple[np.ndarray, np.ndarray]:
    """Mean vector and covariance (xxpp) of a Fock-basis density matrix."""
    n, d = dm.n_modes, dm.cutoff_per_mode
    q, p = quadratures(d)
    ops = [embed(q.matrix, k, n) for k in range(n)] + [embed(p.matrix, k, n) for k in range(n)]
    rho_ops = [dm.matrix @ op for op in ops]
    mean = np.array([np.real(np.trace(r)) for r in rho_ops])
    second = np.array([[np.real(np.sum(rk * ol.T)) for ol in ops] for rk in rho_ops])
    cov = 0.5 * (second + second.T) - np.outer(mean, mean)
    return mean, cov


def mean_photon_number(dm: FockOperator, mode: int = 0) -> float:
    n_op = embed(number_operator(dm.cutoff_per_mode).matrix, mode, dm.n_modes)
    return float(np.real(np.trace(dm.matrix @ n_op)))


# --- Divergences ---
def _spectrum(matrix: np.ndarray, what: str) -> Tuple[np.ndarray, np.ndarray]:
    herm = float(np.max(np.abs(matrix - matrix.conj().T)))
    if herm > 1.0e-10:
        raise OracleUnreliableError(f"{what} is not Hermitian (residual {herm:.3e})")
    lam, vecs = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    if lam[0] < -1.0e-10:
        raise OracleUnreliableError(f"{what} is not positive semidefinite (eigenvalue {lam[0]:.3e})")
    return lam, vecs


def oracle_divergences(rho: np.ndarray, sigma: np.ndarray,
                       settings: Optional[OracleSettings] = None) -> OracleResult:
    """D = Tr rho (ln rho - ln sigma) and V = Tr rho (ln rho - ln sigma)^2 - D^2."""
    settings = get_oracle_settings(settings)
    rho = rho.matrix if isinstance(rho, FockOperator) else np.asarray(rho)
    sigma = sigma.matrix if isinstance(sigma, FockOperator) else np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise InvalidArgumentError(f"shape mismatch: {rho.shape} vs {sigma.shape}")
    floor = settings.eig_floor

    lam_r, vec_r = _spectrum(rho, "rho")
    lam_s, vec_s = _spectrum(sigma, "sigma")
    clamped_s = lam_s < floor
    weight = 0.0
    if np.any(clamped_s):
        overlap = vec_s[:, clamped_s].conj().T @ rho @ vec_s[:, clamped_s]
        weight = float(np.real(np.trace(overlap)))
    if weight > settings.unreliable_weight:
        raise OracleUnreliableError(
            f"rho carries weight {weight:.3e} on {int(clamped_s.sum())} directions where sigma "
            f"is below the eigenvalue floor {floor:g}"
        )

    log_s = (vec_s * np.log(np.maximum(lam_s, floor))) @ vec_s.conj().T
    # ln sigma in the eigenbasis of rho
    b = vec_r.conj().T @ log_s @ vec_r
    p = np.clip(lam_r, 0.0, None)
    log_p = np.log(np.maximum(lam_r, floor))
    b_diag = np.real(np.diag(b))
    D = float(np.sum(special.xlogy(p, p)) - np.sum(p * b_diag))
    col_norms = np.sum(np.abs(b) ** 2, axis=0)
    second = float(np.sum(p * (log_p**2 - 2.0 * log_p * b_diag + col_norms)))
    result = OracleResult(
        relative_entropy=D,
        variance=second - D * D,
        clamped_rho=int(np.sum(lam_r < floor)),
        clamped_sigma=int(clamped_s.sum()),
        sigma_clamped_weight=weight,
    )
    logger.debug("  -> oracle D=%.12g V=%.12g clamps=%d/%d", D, result.variance,
                 result.clamped_rho, result.clamped_sigma)
    return result


def stability_check(builder: Callable[[int], Tuple[FockOperator, FockOperator]], cutoff: int,
                    settings: Optional[OracleSettings] = None) -> Dict[str, object]:
    """Runs the oracle at `cutoff` and 2*`cutoff` and reports the drift."""
    settings = get_oracle_settings(settings)
    runs = {}
    for d in (cutoff, 2 * cutoff):
        logger.info("  -> oracle run at cutoff %d", d)
        rho, sigma = builder(d)
        runs[d] = (rho, sigma, oracle_divergences(rho, sigma, settings))
    base, doubled = runs[cutoff][2], runs[2 * cutoff][2]
    return {
        "runs": runs,
        "stability_d": abs(base.relative_entropy - doubled.relative_entropy),
        "stability_v": abs(base.variance - doubled.variance),
    }
