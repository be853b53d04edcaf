"""Relative entropy, relative entropy variance and Stein exponents of Gaussian states."""
from .divergence import divergence_report, divergences, relative_entropy, relative_entropy_variance
from .errors import GaussSteinError
from .states import GaussianState

__all__ = [
    "GaussianState",
    "GaussSteinError",
    "divergence_report",
    "divergences",
    "relative_entropy",
    "relative_entropy_variance",
]
