"""Second-order asymptotics of the optimal Type-II error exponent.

    -ln beta ~ M D + sqrt(M V) Phi^{-1}(epsilon)

The O(ln M) correction is not part of any output here.
"""
import logging
import math
from typing import Iterable, List, Optional

import numpy as np
import pandas as pd
from scipy import special

from .errors import InvalidArgumentError
from .models import ExponentPoint, NumericsSettings
from .settings import get_numerics

logger = logging.getLogger(__name__)

R_SECOND_LABEL = "R_second"
CSV_NOTE = "# R_second = D + sqrt(V/M)*Phi^-1(epsilon); the O(ln M)/M term is excluded"

# Rational approximation of the normal quantile (relative error ~1.15e-9 before refinement).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def normal_cdf(x: float) -> float:
    """Phi(x) = erfc(-x / sqrt 2) / 2."""
    return 0.5 * special.erfc(-x / math.sqrt(2.0))


def _polyval(coeffs, x):
    acc = 0.0
    for c in coeffs:
        acc = acc * x + c
    return acc


def _tail(p: float) -> float:
    q = math.sqrt(-2.0 * math.log(p))
    return _polyval(_C, q) / (_polyval(_D, q) * q + 1.0)


def _rational_quantile(p: float) -> float:
    if p < _P_LOW:
        return _tail(p)
    if p > 1.0 - _P_LOW:
        return -_tail(1.0 - p)
    q = p - 0.5
    r = q * q
    return _polyval(_A, r) * q / (_polyval(_B, r) * r + 1.0)


def inverse_normal_cdf(epsilon: float) -> float:
    """Phi^{-1}(epsilon), refined by one Newton step against the erfc-based Phi."""
    try:
        eps = float(epsilon)
    except (TypeError, ValueError):
        raise InvalidArgumentError(f"epsilon must be a number, got {epsilon!r}")
    if not 0.0 < eps < 1.0:
        raise InvalidArgumentError(f"epsilon must lie in (0, 1), got {epsilon}")
    if eps == 0.5:
        return 0.0

    x = _rational_quantile(eps)
    # Residual taken on the smaller tail to keep it accurate far from the center.
    if eps < 0.5:
        residual = normal_cdf(x) - eps
    else:
        residual = (1.0 - eps) - normal_cdf(-x)
    density = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return x - residual / density


def _check_moments(D: float, V: float, settings: NumericsSettings):
    slack = settings.validity_tol
    if not (np.isfinite(D) and np.isfinite(V)):
        raise InvalidArgumentError(f"D and V must be finite, got D={D}, V={V}")
    if D < -slack or V < -slack:
        raise InvalidArgumentError(f"D and V must be nonnegative, got D={D}, V={V}")
    return max(0.0, float(D)), max(0.0, float(V))


def _check_trials(M) -> int:
    if isinstance(M, bool) or int(M) != M or M < 1:
        raise InvalidArgumentError(f"trial count must be a positive integer, got {M!r}")
    return int(M)


def gaussian_approx_exponent(D: float, V: float, epsilon: float, M: int,
                             settings: Optional[NumericsSettings] = None) -> ExponentPoint:
    settings = get_numerics(settings)
    D, V = _check_moments(D, V, settings)
    M = _check_trials(M)
    z = inverse_normal_cdf(epsilon)
    return ExponentPoint(
        trials=M, epsilon=epsilon, r_first=D, r_second=D + math.sqrt(V / M) * z
    )


def exponent_curve(D: float, V: float, epsilon: float, M_grid: Iterable[int],
                   settings: Optional[NumericsSettings] = None) -> List[ExponentPoint]:
    grid = [_check_trials(M) for M in M_grid]
    if not grid:
        raise InvalidArgumentError("M grid must not be empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidArgumentError("M grid must be strictly ascending")
    return [gaussian_approx_exponent(D, V, epsilon, M, settings) for M in grid]


def required_trials(D: float, V: float, epsilon: float, fraction: float = 0.9,
                    settings: Optional[NumericsSettings] = None) -> int:
    """Smallest M with R_second >= fraction * D, for epsilon < 1/2."""
    settings = get_numerics(settings)
    D, V = _check_moments(D, V, settings)
    if not 0.0 < fraction < 1.0:
        raise InvalidArgumentError(f"fraction must lie in (0, 1), got {fraction}")
    z = inverse_normal_cdf(epsilon)
    if z >= 0.0 or V == 0.0:
        return 1
    if D == 0.0:
        raise InvalidArgumentError("D = 0: the second-order exponent never reaches a positive fraction of D")
    return max(1, math.ceil(V * z * z / ((1.0 - fraction) * D) ** 2))


def log_trial_grid(m_max: int, m_points: int) -> List[int]:
    """Logarithmically spaced integer grid from 1 to m_max.

    Rounding collapses neighbouring points at small M, so the grid can hold fewer
    than m_points entries; it always starts at 1 and ends at m_max. A single point
    is the grid [m_max].
    """
    m_max = _check_trials(m_max)
    if m_points < 1:
        raise InvalidArgumentError(f"m_points must be >= 1, got {m_points}")
    if m_points > m_max:
        raise InvalidArgumentError(f"m_points={m_points} exceeds the {m_max} distinct trial counts up to m_max")
    if m_points == 1:
        return [m_max]
    grid = np.unique(np.rint(np.logspace(0.0, math.log10(m_max), m_points)).astype(np.int64))
    return [int(M) for M in grid]


def curve_frame(D: float, V: float, points: List[ExponentPoint]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "M": [p.trials for p in points],
            "epsilon": [p.epsilon for p in points],
            "D": D,
            "V": V,
            "R_first": [p.r_first for p in points],
            R_SECOND_LABEL: [p.r_second for p in points],
        }
    )
