"""Relative entropy and relative entropy variance between Gaussian states.

All values are in nats. The alternative state sigma must be faithful (every
symplectic eigenvalue strictly above 1/2); the null state rho may be pure, in
which case the g-form and the alternate variance route take over.
"""
import logging
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import InvalidArgumentError, NotFullSupportError, PureStateDomainError
from .models import DivergenceReport, FormulaRoute, NumericsSettings, StandardFormParams
from .settings import get_numerics
from .states import GaussianState, from_standard_form, require_valid
from .symplectic import (
    WilliamsonDecomposition,
    arcoth,
    entropy_g,
    g_matrix,
    log_partition_function,
    omega,
    nu_roundoff,
    symplectic_inverse,
    williamson,
)

logger = logging.getLogger(__name__)

_SIGMA_Z = np.diag([1.0, -1.0])


class _Prepared(NamedTuple):
    rho: GaussianState
    sigma: GaussianState
    dec_rho: WilliamsonDecomposition
    dec_sigma: WilliamsonDecomposition
    gamma: np.ndarray
    g_sigma: np.ndarray
    rho_pure: bool


def _prepare(rho: GaussianState, sigma: GaussianState, settings: NumericsSettings) -> _Prepared:
    if rho.n_modes != sigma.n_modes:
        raise InvalidArgumentError(
            f"mode mismatch: rho has {rho.n_modes} modes, sigma has {sigma.n_modes}"
        )
    require_valid(rho, settings)
    require_valid(sigma, settings)
    dec_sigma = williamson(sigma.cov, settings)
    if dec_sigma.pure_modes(settings.pure_tol)[0]:
        raise NotFullSupportError(
            f"sigma is not full rank: symplectic eigenvalue nu={dec_sigma.nu[0]:.15g} "
            f"is within {settings.pure_tol:g} of 1/2"
        )
    dec_rho = williamson(rho.cov, settings)
    return _Prepared(
        rho=rho,
        sigma=sigma,
        dec_rho=dec_rho,
        dec_sigma=dec_sigma,
        gamma=rho.mean - sigma.mean,
        g_sigma=g_matrix(sigma.cov, settings, dec_sigma).matrix,
        rho_pure=bool(dec_rho.pure_modes(settings.pure_tol)[0]),
    )


def _entropy_general(prep: _Prepared, g_rho: np.ndarray) -> float:
    gamma_mat = g_rho - prep.g_sigma
    gamma = prep.gamma
    value = (
        log_partition_function(prep.dec_sigma.nu)
        - log_partition_function(prep.dec_rho.nu)
        - np.trace(gamma_mat @ prep.rho.cov)
        + gamma @ prep.g_sigma @ gamma
    )
    return float(0.5 * value)


def _entropy_g_form(prep: _Prepared, settings: NumericsSettings) -> float:
    gamma = prep.gamma
    value = 0.5 * (
        log_partition_function(prep.dec_sigma.nu)
        + np.trace(prep.g_sigma @ prep.rho.cov)
        + gamma @ prep.g_sigma @ gamma
    )
    pure = prep.dec_rho.pure_modes(settings.pure_tol)
    return float(value - np.sum(np.where(pure, 0.0, entropy_g(prep.dec_rho.nu - 0.5))))


def _variance_general(prep: _Prepared, g_rho: np.ndarray) -> float:
    gamma_mat = g_rho - prep.g_sigma
    gv = gamma_mat @ prep.rho.cov
    go = gamma_mat @ omega(prep.rho.n_modes)
    shift = prep.g_sigma @ prep.gamma
    value = np.trace(gv @ gv) / 2.0 + np.trace(go @ go) / 8.0 + shift @ prep.rho.cov @ shift
    return float(value)


def _variance_alternate(dec_rho: WilliamsonDecomposition, dec_sigma: WilliamsonDecomposition,
                        settings: NumericsSettings) -> float:
    """Variance of zero-mean states from the Williamson data alone; rho may be pure."""
    nu = dec_rho.nu
    pure = dec_rho.pure_modes(settings.pure_tol)
    safe = np.where(pure, 1.0, nu)
    a_rho = arcoth(2.0 * safe)
    spread = 4.0 * safe**2 - 1.0
    # arcoth(2 nu)^k (4 nu^2 - 1) -> 0 at nu = 1/2 for k = 1, 2.
    f1 = np.where(pure, 0.0, a_rho**2 * spread)
    f2 = np.where(pure, 0.0, a_rho * spread)

    a_sigma = arcoth(2.0 * dec_sigma.nu)
    s_tilde = symplectic_inverse(dec_rho.S) @ dec_sigma.S
    m = (s_tilde * np.concatenate([a_sigma, a_sigma])) @ s_tilde.T
    md = m * np.concatenate([nu, nu])
    value = (
        np.sum(f1)
        - np.sum(np.concatenate([f2, f2]) * np.diag(m))
        + 2.0 * np.trace(md @ md)
        - np.sum(a_sigma**2)
    )
    return float(value)


def _g_rho(prep: _Prepared, settings: NumericsSettings) -> np.ndarray:
    return g_matrix(prep.rho.cov, settings, prep.dec_rho).matrix


# --- Public entry points ---
def relative_entropy(rho: GaussianState, sigma: GaussianState,
                     settings: Optional[NumericsSettings] = None) -> float:
    settings = get_numerics(settings)
    prep = _prepare(rho, sigma, settings)
    if prep.rho_pure:
        logger.debug("  -> rho has nu=%.15g at the pure boundary, using the g-form", prep.dec_rho.nu[0])
        return _entropy_g_form(prep, settings)
    return _entropy_general(prep, _g_rho(prep, settings))


def relative_entropy_g_form(rho: GaussianState, sigma: GaussianState,
                            settings: Optional[NumericsSettings] = None) -> float:
    settings = get_numerics(settings)
    return _entropy_g_form(_prepare(rho, sigma, settings), settings)


def _zero_mean_difference(prep: _Prepared, settings: NumericsSettings) -> bool:
    return bool(np.max(np.abs(prep.gamma), initial=0.0) <= settings.mean_zero_tol)


def relative_entropy_variance(rho: GaussianState, sigma: GaussianState,
                              settings: Optional[NumericsSettings] = None) -> float:
    settings = get_numerics(settings)
    prep = _prepare(rho, sigma, settings)
    if not prep.rho_pure:
        return _variance_general(prep, _g_rho(prep, settings))
    if not _zero_mean_difference(prep, settings):
        raise PureStateDomainError(
            f"rho is pure (nu={prep.dec_rho.nu[0]:.15g}) and the means differ; "
            "no finite-mean variance route exists for pure rho"
        )
    logger.debug("  -> rho has nu=%.15g at the pure boundary, using the alternate route", prep.dec_rho.nu[0])
    return _variance_alternate(prep.dec_rho, prep.dec_sigma, settings)


def relative_entropy_variance_alternate(rho: GaussianState, sigma: GaussianState,
                                        settings: Optional[NumericsSettings] = None) -> float:
    settings = get_numerics(settings)
    for name, state in (("rho", rho), ("sigma", sigma)):
        if np.max(np.abs(state.mean)) > settings.mean_zero_tol:
            raise InvalidArgumentError(
                f"the alternate variance form needs zero-mean states; {name} has mean {state.mean.tolist()}"
            )
    prep = _prepare(rho, sigma, settings)
    return _variance_alternate(prep.dec_rho, prep.dec_sigma, settings)


def divergence_report(rho: GaussianState, sigma: GaussianState,
                      settings: Optional[NumericsSettings] = None) -> DivergenceReport:
    """D and V together with the intermediates that produced them."""
    settings = get_numerics(settings)
    prep = _prepare(rho, sigma, settings)
    g_rho = None
    if prep.rho_pure:
        entropy = _entropy_g_form(prep, settings)
        entropy_route = FormulaRoute.G_FORM
        if not _zero_mean_difference(prep, settings):
            raise PureStateDomainError(
                f"rho is pure (nu={prep.dec_rho.nu[0]:.15g}) and the means differ; "
                "no finite-mean variance route exists for pure rho"
            )
        variance = _variance_alternate(prep.dec_rho, prep.dec_sigma, settings)
        route = FormulaRoute.ALTERNATE
    else:
        g_rho = _g_rho(prep, settings)
        entropy = _entropy_general(prep, g_rho)
        entropy_route = FormulaRoute.GENERAL
        variance = _variance_general(prep, g_rho)
        route = FormulaRoute.GENERAL

    return DivergenceReport(
        relative_entropy=entropy,
        variance=variance,
        gamma=prep.gamma.tolist(),
        gamma_norm=None if g_rho is None else float(np.linalg.norm(g_rho - prep.g_sigma)),
        formula_route=route,
        relative_entropy_route=entropy_route,
        nu_rho=prep.dec_rho.nu.tolist(),
        nu_sigma=prep.dec_sigma.nu.tolist(),
        g_rho=None if g_rho is None else g_rho.tolist(),
        g_sigma=prep.g_sigma.tolist(),
        z_rho=float(np.prod((prep.dec_rho.nu - 0.5) * (prep.dec_rho.nu + 0.5))),
        z_sigma=float(np.prod((prep.dec_sigma.nu - 0.5) * (prep.dec_sigma.nu + 0.5))),
    )


# --- Two-mode standard form ---
class StandardFormBlocks(NamedTuple):
    s0: np.ndarray
    nu: np.ndarray  # (nu_minus, nu_plus)
    k: np.ndarray   # S0 arcoth(2D) S0; NaN when a mode is pure
    roundoff: float = 0.0

    def pure_modes(self, pure_tol: float) -> np.ndarray:
        return self.nu <= 0.5 + pure_tol + self.roundoff

    def is_pure(self, pure_tol: float) -> bool:
        return bool(np.any(self.pure_modes(pure_tol)))

    @property
    def omega_plus(self) -> float:
        return float(self.s0[0, 0])

    @property
    def omega_minus(self) -> float:
        return float(self.s0[0, 1])


def standard_form_blocks(p: StandardFormParams,
                         settings: Optional[NumericsSettings] = None) -> StandardFormBlocks:
    """Closed-form Williamson data of a two-mode standard-form covariance."""
    settings = get_numerics(settings)
    a, b, c = p.a, p.b, p.c
    sqrt_y = np.sqrt((a + b) ** 2 - 4.0 * c**2)
    nu = np.array([(sqrt_y - (b - a)) / 2.0, (sqrt_y + (b - a)) / 2.0])
    w_plus = np.sqrt((a + b + sqrt_y) / (2.0 * sqrt_y))
    # a + b - sqrt(y) = 4c^2 / (a + b + sqrt(y))
    w_minus = np.copysign(np.sqrt(2.0 * c**2 / (sqrt_y * (a + b + sqrt_y))), c)
    roundoff = nu_roundoff([[a, c], [c, b]])
    s0 = np.array([[w_plus, w_minus], [w_minus, w_plus]])
    if np.min(nu) <= 0.5 + settings.pure_tol + roundoff:
        k = np.full((2, 2), np.nan)
    else:
        k = s0 @ np.diag(arcoth(2.0 * nu)) @ s0
    return StandardFormBlocks(s0=s0, nu=nu, k=k, roundoff=roundoff)


def standard_form_divergences(rho_p: StandardFormParams, sigma_p: StandardFormParams,
                              settings: Optional[NumericsSettings] = None) -> DivergenceReport:
    settings = get_numerics(settings)
    rho_state = from_standard_form(rho_p)
    sigma_state = from_standard_form(sigma_p)
    blk_rho = standard_form_blocks(rho_p, settings)
    blk_sigma = standard_form_blocks(sigma_p, settings)
    if blk_sigma.is_pure(settings.pure_tol):
        raise NotFullSupportError(
            f"sigma is not full rank: symplectic eigenvalue nu={np.min(blk_sigma.nu):.15g} "
            f"is within {settings.pure_tol:g} of 1/2"
        )
    v0_rho = np.array([[rho_p.a, rho_p.c], [rho_p.c, rho_p.b]])
    z_sigma = float(np.prod((blk_sigma.nu - 0.5) * (blk_sigma.nu + 0.5)))
    z_rho = float(np.prod((blk_rho.nu - 0.5) * (blk_rho.nu + 0.5)))
    entropy = 0.5 * (
        np.log(z_sigma) + 4.0 * np.trace(_SIGMA_Z @ blk_sigma.k @ _SIGMA_Z @ v0_rho)
    ) - float(np.sum(np.where(blk_rho.pure_modes(settings.pure_tol), 0.0, entropy_g(blk_rho.nu - 0.5))))

    g_sigma = 2.0 * np.block([
        [_SIGMA_Z @ blk_sigma.k @ _SIGMA_Z, np.zeros((2, 2))],
        [np.zeros((2, 2)), blk_sigma.k],
    ])
    rho_pure = blk_rho.is_pure(settings.pure_tol)
    if rho_pure:
        logger.debug("  -> standard-form rho is pure, variance via the alternate route")
        variance = _variance_alternate(
            williamson(rho_state.cov, settings), williamson(sigma_state.cov, settings), settings
        )
        route = FormulaRoute.ALTERNATE
        g_rho = None
        gamma_norm = None
    else:
        gamma_p = blk_rho.k - blk_sigma.k
        conj = _SIGMA_Z @ gamma_p @ _SIGMA_Z
        inner = conj @ v0_rho
        variance = float(4.0 * np.trace(inner @ inner) - np.trace(conj @ gamma_p))
        route = FormulaRoute.STANDARD_FORM
        g_rho = 2.0 * np.block([
            [_SIGMA_Z @ blk_rho.k @ _SIGMA_Z, np.zeros((2, 2))],
            [np.zeros((2, 2)), blk_rho.k],
        ])
        gamma_norm = float(np.linalg.norm(g_rho - g_sigma))

    return DivergenceReport(
        relative_entropy=float(entropy),
        variance=variance,
        gamma=[0.0] * 4,
        gamma_norm=gamma_norm,
        formula_route=route,
        relative_entropy_route=FormulaRoute.STANDARD_FORM,
        nu_rho=np.sort(blk_rho.nu).tolist(),
        nu_sigma=np.sort(blk_sigma.nu).tolist(),
        g_rho=None if g_rho is None else g_rho.tolist(),
        g_sigma=g_sigma.tolist(),
        z_rho=z_rho,
        z_sigma=z_sigma,
    )


def divergences(rho: GaussianState, sigma: GaussianState,
                settings: Optional[NumericsSettings] = None) -> Tuple[float, float]:
    report = divergence_report(rho, sigma, settings)
    return report.relative_entropy, report.variance
