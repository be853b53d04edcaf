"""Exception hierarchy. Each error carries the exit code the CLI reports for it."""
from typing import Dict, Optional


class GaussSteinError(Exception):
    exit_code = 1


class InvalidArgumentError(GaussSteinError, ValueError):
    exit_code = 2


class StateValidationError(InvalidArgumentError):
    """A state violates symmetry or the uncertainty relation."""


class NotFullSupportError(GaussSteinError):
    """The alternative state sigma has a (near-)pure symplectic direction."""
    exit_code = 3


class PureStateDomainError(GaussSteinError):
    """A routine needs arcoth(2*nu) but some nu sits on the 1/2 boundary."""
    exit_code = 3


class NumericalFailureError(GaussSteinError):
    exit_code = 3

    def __init__(self, message: str, residuals: Optional[Dict[str, float]] = None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class ToleranceBreachError(GaussSteinError):
    exit_code = 4


class CutoffTooSmallError(GaussSteinError):
    exit_code = 5


class OracleUnreliableError(GaussSteinError):
    exit_code = 5
