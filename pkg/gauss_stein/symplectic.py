"""Symplectic linear algebra for Gaussian states.

Quadratures are ordered xxpp, (q_1..q_n, p_1..p_n), and the vacuum has variance
1/2. The Williamson decomposition is read off the Hermitian matrix
i V^{1/2} Omega V^{1/2}, which is similar to i V Omega and shares its +-nu spectrum.
"""
import functools
import logging
from typing import Dict, Optional

import numpy as np
from pydantic import Field
from scipy import special

from .errors import InvalidArgumentError, NumericalFailureError, PureStateDomainError
from .models import FrozenArrayModel, NumericsSettings, readonly_array
from .settings import get_numerics

logger = logging.getLogger(__name__)

ROUNDOFF_FACTOR = 16.0


class SymplecticForm(FrozenArrayModel):
    n_modes: int = Field(..., ge=1)
    matrix: np.ndarray


class WilliamsonDecomposition(FrozenArrayModel):
    """V = S (D (+) D) S^T with D = diag(nu) ascending."""
    S: np.ndarray
    nu: np.ndarray
    residuals: Dict[str, float] = {}
    roundoff: float = 0.0  # float64 floor on |nu - 1/2| for this covariance

    @property
    def n_modes(self) -> int:
        return len(self.nu)

    def pure_modes(self, pure_tol: float) -> np.ndarray:
        return self.nu <= 0.5 + pure_tol + self.roundoff


class GMatrix(FrozenArrayModel):
    matrix: np.ndarray


def _check_modes(n_modes) -> int:
    if isinstance(n_modes, bool) or not isinstance(n_modes, (int, np.integer)):
        raise InvalidArgumentError(f"n_modes must be an integer, got {n_modes!r}")
    if n_modes < 1:
        raise InvalidArgumentError(f"n_modes must be >= 1, got {n_modes}")
    return int(n_modes)


@functools.lru_cache(maxsize=16)
def omega(n_modes: int) -> np.ndarray:
    """Read-only Omega = [[0, I], [-I, 0]] for internal use."""
    mat = np.kron(np.array([[0.0, 1.0], [-1.0, 0.0]]), np.eye(n_modes))
    mat.flags.writeable = False
    return mat


def symplectic_form(n_modes: int) -> SymplecticForm:
    n = _check_modes(n_modes)
    return SymplecticForm(n_modes=n, matrix=np.array(omega(n)))


def _even_square(matrix, what: str) -> np.ndarray:
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidArgumentError(f"{what} must be square, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[0] % 2:
        raise InvalidArgumentError(f"{what} must have even dimension, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{what} contains non-finite entries")
    return arr


def as_covariance(V, settings: Optional[NumericsSettings] = None) -> np.ndarray:
    """Checks shape and symmetry; returns the symmetrized float array."""
    settings = get_numerics(settings)
    V = _even_square(V, "covariance")
    residual = np.max(np.abs(V - V.T))
    if residual > settings.symmetry_tol * max(1.0, np.max(np.abs(V))):
        raise InvalidArgumentError(f"covariance is not symmetric (residual {residual:.3e})")
    return 0.5 * (V + V.T)


def is_symplectic(S, tol: float = 1.0e-9) -> bool:
    S = _even_square(S, "matrix")
    om = omega(S.shape[0] // 2)
    return bool(np.max(np.abs(S @ om @ S.T - om)) <= tol)


def symplectic_inverse(S: np.ndarray) -> np.ndarray:
    """S^{-1} = -Omega S^T Omega for symplectic S."""
    om = omega(S.shape[0] // 2)
    return -om @ S.T @ om


def arcoth(x):
    return np.arctanh(1.0 / np.asarray(x, dtype=float))


def entropy_g(x):
    """g(x) = (x+1) ln(x+1) - x ln x, with g(0) = 0."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, None)
    return special.xlogy(x + 1.0, x + 1.0) - special.xlogy(x, x)


def _hermitian_spectrum(V: np.ndarray):
    """Eigendecomposition of H = i V^{1/2} Omega V^{1/2}; returns (lam, W, V^{1/2})."""
    evals, q = np.linalg.eigh(V)
    if evals[0] <= 0:
        raise InvalidArgumentError(
            f"covariance is not positive definite (smallest eigenvalue {evals[0]:.3e})"
        )
    sqrt_v = (q * np.sqrt(evals)) @ q.T
    h = 1j * (sqrt_v @ omega(V.shape[0] // 2) @ sqrt_v)
    lam, w = np.linalg.eigh(0.5 * (h + h.conj().T))
    return lam, w, sqrt_v


def _pairing(lam: np.ndarray, settings: NumericsSettings) -> np.ndarray:
    n = len(lam) // 2
    mismatch = float(np.max(np.abs(lam[n:] + lam[:n][::-1])))
    scale = max(1.0, float(lam[-1]))
    if mismatch > settings.pairing_tol * scale:
        raise NumericalFailureError(
            f"eigenvalues of iV(Omega) are not paired as +-nu (mismatch {mismatch:.3e})",
            residuals={"pairing": mismatch, "scale": scale},
        )
    return lam[n:]


def nu_roundoff(V) -> float:
    """Floating-point floor on |nu - 1/2|.

    Symplectic eigenvalues near 1/2 come out of entries of size |V| that cancel,
    e.g. a^2 - c^2 for a two-mode squeezed state, so the stored covariance alone
    carries an error of order eps |V|^2. Tolerances on nu >= 1/2 and on purity
    are widened by this amount.
    """
    norm = float(np.linalg.norm(np.asarray(V, dtype=float), 2))
    return ROUNDOFF_FACTOR * np.finfo(float).eps * norm * norm


def symplectic_eigenvalues(V, settings: Optional[NumericsSettings] = None) -> np.ndarray:
    """Symplectic eigenvalues in ascending order. Does not enforce nu >= 1/2."""
    settings = get_numerics(settings)
    lam, _, _ = _hermitian_spectrum(as_covariance(V, settings))
    return _pairing(lam, settings)


def williamson(V, settings: Optional[NumericsSettings] = None) -> WilliamsonDecomposition:
    settings = get_numerics(settings)
    V = as_covariance(V, settings)
    n = V.shape[0] // 2
    lam, w, sqrt_v = _hermitian_spectrum(V)
    nu = _pairing(lam, settings)
    roundoff = nu_roundoff(V)
    if nu[0] < 0.5 - settings.validity_tol - roundoff:
        raise InvalidArgumentError(
            f"covariance violates the uncertainty relation (nu={nu[0]:.12g} < 1/2)"
        )

    # Eigenvectors of iV(Omega) for +nu, scaled so e^dagger (i Omega) e = 1.
    vecs = sqrt_v @ w[:, n:] / np.sqrt(nu)
    # Fix the free phase: the largest position component is real and positive.
    pivots = np.argmax(np.abs(vecs[:n, :]), axis=0)
    phases = vecs[pivots, np.arange(n)]
    vecs = vecs * (np.abs(phases) / phases)

    S = np.empty((2 * n, 2 * n))
    S[:, :n] = np.sqrt(2.0) * vecs.real
    S[:, n:] = -np.sqrt(2.0) * vecs.imag

    om = omega(n)
    d2 = np.concatenate([nu, nu])
    residuals = {
        "pairing": float(np.max(np.abs(lam[n:] + lam[:n][::-1]))),
        "symplectic": float(np.max(np.abs(S @ om @ S.T - om))),
        "reconstruction": float(
            np.max(np.abs((S * d2) @ S.T - V)) / max(1.0, np.max(np.abs(V)))
        ),
    }
    logger.debug("  -> williamson nu=%s residuals=%s", nu, residuals)
    return WilliamsonDecomposition(S=readonly_array(S), nu=readonly_array(nu), residuals=residuals,
                                   roundoff=roundoff)


def _require_mixed(nu: np.ndarray, settings: NumericsSettings, roundoff: float):
    if nu[0] <= 0.5 + settings.pure_tol + roundoff:
        raise PureStateDomainError(
            f"arcoth(2 nu) is undefined at the pure boundary: nu={nu[0]:.12g}"
        )


def matrix_arcoth_2iVOmega(V, settings: Optional[NumericsSettings] = None) -> np.ndarray:
    """Real K with arcoth(2iV(Omega)) = iK.

    Evaluated as V^{1/2} W arcoth(2 Lambda) W^dagger V^{-1/2}, where W diagonalizes
    the Hermitian i V^{1/2} Omega V^{1/2}. The matrix function itself is purely
    imaginary; its real residual is checked against imag_tol and dropped.
    """
    settings = get_numerics(settings)
    V = as_covariance(V, settings)
    lam, w, sqrt_v = _hermitian_spectrum(V)
    nu = _pairing(lam, settings)
    _require_mixed(nu, settings, nu_roundoff(V))

    inv_sqrt_v = np.linalg.inv(sqrt_v)
    func = sqrt_v @ (w * arcoth(2.0 * lam)) @ w.conj().T @ inv_sqrt_v
    residual = float(np.max(np.abs(func.real)))
    scale = max(1.0, float(np.max(np.abs(func.imag))))
    if residual > settings.imag_tol * scale:
        raise NumericalFailureError(
            f"arcoth(2iV(Omega)) is not purely imaginary (residual {residual:.3e})",
            residuals={"real_part": residual},
        )
    return func.imag


def g_matrix(
    V,
    settings: Optional[NumericsSettings] = None,
    decomposition: Optional[WilliamsonDecomposition] = None,
) -> GMatrix:
    """G = -2 Omega S [arcoth(2D)]^{(+)2} S^T Omega."""
    settings = get_numerics(settings)
    dec = decomposition if decomposition is not None else williamson(V, settings)
    _require_mixed(dec.nu, settings, dec.roundoff)
    om = omega(dec.n_modes)
    a = arcoth(2.0 * dec.nu)
    G = -2.0 * om @ (dec.S * np.concatenate([a, a])) @ dec.S.T @ om
    return GMatrix(matrix=readonly_array(G))


def g_matrix_direct(V, settings: Optional[NumericsSettings] = None) -> GMatrix:
    """G = 2i Omega arcoth(2iV(Omega)) through the matrix function."""
    K = matrix_arcoth_2iVOmega(V, settings)
    om = omega(K.shape[0] // 2)
    return GMatrix(matrix=readonly_array(-2.0 * om @ K))


def log_partition_function(nu: np.ndarray) -> float:
    """ln Z = sum ln(nu^2 - 1/4); -inf when some nu sits at 1/2."""
    factors = (nu - 0.5) * (nu + 0.5)
    if np.any(factors <= 0):
        return -np.inf
    return float(np.sum(np.log(factors)))


def partition_function(V, settings: Optional[NumericsSettings] = None) -> float:
    """Z = det(V + i Omega / 2), real for any valid covariance."""
    settings = get_numerics(settings)
    V = as_covariance(V, settings)
    z = np.linalg.det(V + 0.5j * omega(V.shape[0] // 2))
    if abs(z.imag) > settings.imag_tol * max(1.0, abs(z.real)):
        raise NumericalFailureError(
            f"det(V + i Omega/2) has imaginary part {z.imag:.3e}",
            residuals={"imag": float(abs(z.imag))},
        )
    return float(z.real)
