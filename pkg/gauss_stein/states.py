import json
import logging
from typing import Optional, Sequence

import numpy as np
from pydantic import Field, ValidationError, field_validator, model_validator
from scipy import linalg

from .errors import InvalidArgumentError, StateValidationError
from .models import (
    FrozenArrayModel,
    NumericsSettings,
    StandardFormParams,
    StateDocument,
    ValidationReport,
    readonly_array,
)
from .settings import get_numerics
from .symplectic import entropy_g, is_symplectic, nu_roundoff, symplectic_eigenvalues

logger = logging.getLogger(__name__)


class GaussianState(FrozenArrayModel):
    """First and second moments of a Gaussian state, xxpp ordering, vacuum variance 1/2.

    Construction checks structure only. Physicality is checked by `validate`
    and enforced by `require_valid`.
    """

    n_modes: int = Field(..., ge=1)
    mean: np.ndarray
    cov: np.ndarray

    @field_validator("mean", "cov", mode="before")
    @classmethod
    def _as_array(cls, value):
        return readonly_array(value)

    @model_validator(mode="after")
    def _check_shapes(self):
        dim = 2 * self.n_modes
        if self.mean.shape != (dim,):
            raise ValueError(f"mean must have length {dim}, got shape {self.mean.shape}")
        if self.cov.shape != (dim, dim):
            raise ValueError(f"cov must be {dim}x{dim}, got shape {self.cov.shape}")
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.cov))):
            raise ValueError("mean and cov must be finite")
        return self

    @classmethod
    def from_moments(cls, mean, cov) -> "GaussianState":
        cov = np.asarray(cov, dtype=float)
        try:
            return cls(n_modes=max(1, cov.shape[0] // 2) if cov.ndim == 2 else 1, mean=mean, cov=cov)
        except ValidationError as e:
            raise InvalidArgumentError(f"invalid Gaussian state: {e}") from e


# --- Quadrature ordering ---
def _xpxp_order(n_modes: int) -> np.ndarray:
    """Index i of the xxpp vector holds entry perm[i] of the xpxp vector."""
    return np.concatenate([np.arange(0, 2 * n_modes, 2), np.arange(1, 2 * n_modes, 2)])


def xpxp_to_xxpp(mean, cov):
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    perm = _xpxp_order(len(mean) // 2)
    return mean[perm], cov[np.ix_(perm, perm)]


def xxpp_to_xpxp(mean, cov):
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    inv = np.argsort(_xpxp_order(len(mean) // 2))
    return mean[inv], cov[np.ix_(inv, inv)]


# --- Named constructors ---
def _check_photons(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise InvalidArgumentError(f"{name} must be a finite number >= 0, got {value}")
    return value


def thermal_state(n_mean: float) -> GaussianState:
    n_mean = _check_photons(n_mean, "n_mean")
    return GaussianState(n_modes=1, mean=np.zeros(2), cov=(n_mean + 0.5) * np.eye(2))


def displaced_thermal(mean_q: float, mean_p: float, n_mean: float) -> GaussianState:
    n_mean = _check_photons(n_mean, "n_mean")
    return GaussianState.from_moments([mean_q, mean_p], (n_mean + 0.5) * np.eye(2))


def _two_mode(a: float, b: float, c: float) -> np.ndarray:
    return linalg.block_diag([[a, c], [c, b]], [[a, -c], [-c, b]])


def tmsv(n_s: float) -> GaussianState:
    """Two-mode squeezed vacuum with n_s photons per mode."""
    n_s = _check_photons(n_s, "n_s")
    mu = n_s + 0.5
    c = np.sqrt(n_s * (n_s + 1.0))  # sqrt(mu^2 - 1/4) without cancellation
    return GaussianState(n_modes=2, mean=np.zeros(4), cov=_two_mode(mu, mu, c))


def standard_form_params(a: float, b: float, c: float,
                         settings: Optional[NumericsSettings] = None) -> StandardFormParams:
    settings = get_numerics(settings)
    try:
        return StandardFormParams.model_validate(
            {"a": a, "b": b, "c": c},
            context={"standard_form_slack": settings.standard_form_slack},
        )
    except ValidationError as e:
        raise InvalidArgumentError(f"invalid standard-form parameters: {e}") from e


def from_standard_form(p: StandardFormParams) -> GaussianState:
    return GaussianState(n_modes=2, mean=np.zeros(4), cov=_two_mode(p.a, p.b, p.c))


def extract_standard_form(
    state: GaussianState, settings: Optional[NumericsSettings] = None
) -> StandardFormParams:
    """Reads (a, b, c) off a covariance already in two-mode standard form."""
    settings = get_numerics(settings)
    if state.n_modes != 2:
        raise InvalidArgumentError(f"standard form needs 2 modes, got {state.n_modes}")
    V = state.cov
    a, b, c = V[0, 0], V[1, 1], V[0, 1]
    expected = _two_mode(a, b, c)
    residual = np.max(np.abs(V - expected))
    if residual > settings.symmetry_tol * max(1.0, np.max(np.abs(V))):
        raise InvalidArgumentError(
            f"covariance is not in two-mode standard form (residual {residual:.3e})"
        )
    return standard_form_params(a, b, c, settings)


def product_state(*states: GaussianState) -> GaussianState:
    """Tensor product, modes concatenated in argument order."""
    if not states:
        raise InvalidArgumentError("product_state needs at least one state")
    parts = [xxpp_to_xpxp(s.mean, s.cov) for s in states]
    mean = np.concatenate([m for m, _ in parts])
    cov = linalg.block_diag(*[c for _, c in parts])
    mean, cov = xpxp_to_xxpp(mean, cov)
    return GaussianState(n_modes=sum(s.n_modes for s in states), mean=mean, cov=cov)


# --- Validation ---
def validate(state: GaussianState, tol: Optional[float] = None,
             settings: Optional[NumericsSettings] = None) -> ValidationReport:
    settings = get_numerics(settings)
    tol = settings.validity_tol if tol is None else tol
    V = state.cov
    sym = float(np.max(np.abs(V - V.T)))
    if sym > settings.symmetry_tol * max(1.0, np.max(np.abs(V))):
        return ValidationReport(
            passed=False, symmetry_residual=sym, min_symplectic_eigenvalue=float("nan"),
            message=f"covariance is not symmetric (residual {sym:.3e})",
        )
    try:
        nu_min = float(symplectic_eigenvalues(V, settings)[0])
    except InvalidArgumentError as e:
        return ValidationReport(
            passed=False, symmetry_residual=sym, min_symplectic_eigenvalue=float("nan"),
            message=str(e),
        )
    if nu_min < 0.5 - tol - nu_roundoff(V):
        return ValidationReport(
            passed=False, symmetry_residual=sym, min_symplectic_eigenvalue=nu_min,
            message=f"uncertainty relation violated: nu={nu_min:.12g} < 1/2",
        )
    return ValidationReport(passed=True, symmetry_residual=sym, min_symplectic_eigenvalue=nu_min)


def require_valid(state: GaussianState, settings: Optional[NumericsSettings] = None) -> GaussianState:
    report = validate(state, settings=settings)
    if not report.passed:
        raise StateValidationError(report.message)
    return state


def von_neumann_entropy(state: GaussianState, settings: Optional[NumericsSettings] = None) -> float:
    nu = symplectic_eigenvalues(state.cov, settings)
    return float(np.sum(entropy_g(nu - 0.5)))


# --- Gaussian unitaries ---
def apply_symplectic(state: GaussianState, S, settings: Optional[NumericsSettings] = None) -> GaussianState:
    settings = get_numerics(settings)
    S = np.asarray(S, dtype=float)
    if S.shape != state.cov.shape:
        raise InvalidArgumentError(f"symplectic matrix shape {S.shape} does not match {state.cov.shape}")
    if not is_symplectic(S, settings.reconstruction_tol):
        raise InvalidArgumentError("matrix is not symplectic")
    cov = S @ state.cov @ S.T
    return GaussianState(n_modes=state.n_modes, mean=S @ state.mean, cov=0.5 * (cov + cov.T))


def displace(state: GaussianState, d) -> GaussianState:
    d = np.asarray(d, dtype=float)
    if d.shape != state.mean.shape:
        raise InvalidArgumentError(f"displacement must have shape {state.mean.shape}, got {d.shape}")
    return GaussianState(n_modes=state.n_modes, mean=state.mean + d, cov=state.cov)


def _single_mode_block(block: np.ndarray, n_modes: int, mode: int) -> np.ndarray:
    if not 0 <= mode < n_modes:
        raise InvalidArgumentError(f"mode {mode} out of range for {n_modes} modes")
    S = np.eye(2 * n_modes)
    idx = [mode, n_modes + mode]
    S[np.ix_(idx, idx)] = block
    return S


def phase_rotation(theta: float, n_modes: int = 1, mode: int = 0) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return _single_mode_block(np.array([[c, s], [-s, c]]), n_modes, mode)


def single_mode_squeezer(r: float, n_modes: int = 1, mode: int = 0) -> np.ndarray:
    return _single_mode_block(np.diag([np.exp(-r), np.exp(r)]), n_modes, mode)


def beamsplitter_symplectic(eta: float, n_modes: int = 2, modes: Sequence[int] = (0, 1)) -> np.ndarray:
    """a_i -> sqrt(eta) a_i + sqrt(1-eta) a_j, a_j -> -sqrt(1-eta) a_i + sqrt(eta) a_j."""
    if not 0 <= eta <= 1:
        raise InvalidArgumentError(f"eta must lie in [0, 1], got {eta}")
    i, j = modes
    if i == j or not (0 <= i < n_modes and 0 <= j < n_modes):
        raise InvalidArgumentError(f"invalid mode pair {modes} for {n_modes} modes")
    t, r = np.sqrt(eta), np.sqrt(1.0 - eta)
    mix = np.eye(n_modes)
    mix[np.ix_([i, j], [i, j])] = [[t, r], [-r, t]]
    return linalg.block_diag(mix, mix)


# --- Random generators for property runs ---
def random_standard_form(rng: np.random.Generator) -> StandardFormParams:
    a, b = rng.uniform(0.6, 3.0, size=2)
    p = StandardFormParams(a=a, b=b, c=0.0)
    return StandardFormParams(a=a, b=b, c=0.9 * p.c_max * rng.uniform(-1.0, 1.0))


def random_symplectic(rng: np.random.Generator, n_modes: int) -> np.ndarray:
    S = np.eye(2 * n_modes)
    for k in range(n_modes):
        S = single_mode_squeezer(rng.uniform(0.0, 1.0), n_modes, k) @ S
        S = phase_rotation(rng.uniform(0.0, 2 * np.pi), n_modes, k) @ S
    for k in range(n_modes - 1):
        S = beamsplitter_symplectic(rng.uniform(0.0, 1.0), n_modes, (k, k + 1)) @ S
        S = phase_rotation(rng.uniform(0.0, 2 * np.pi), n_modes, k + 1) @ S
    return S


def random_state(rng: np.random.Generator, n_modes: int = 1, mean_scale: float = 1.0) -> GaussianState:
    """Rotated and squeezed (r <= 1) thermal modes with nu in [0.6, 3]."""
    nu = rng.uniform(0.6, 3.0, size=n_modes)
    base = GaussianState(n_modes=n_modes, mean=np.zeros(2 * n_modes), cov=np.diag(np.concatenate([nu, nu])))
    state = apply_symplectic(base, random_symplectic(rng, n_modes))
    return displace(state, mean_scale * rng.standard_normal(2 * n_modes))


# --- JSON documents ---
def state_from_document(doc: StateDocument, settings: Optional[NumericsSettings] = None) -> GaussianState:
    state = GaussianState.from_moments(doc.mean, doc.cov)
    return require_valid(state, settings)


def state_to_document(state: GaussianState) -> StateDocument:
    return StateDocument(n_modes=state.n_modes, mean=state.mean.tolist(), cov=state.cov.tolist())


def parse_state_json(text: str, source: str = "<string>",
                     settings: Optional[NumericsSettings] = None) -> GaussianState:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidArgumentError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from e
    try:
        doc = StateDocument.model_validate(raw)
    except ValidationError as e:
        fields = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
        )
        raise InvalidArgumentError(f"{source}: {fields}") from e
    try:
        return state_from_document(doc, settings)
    except InvalidArgumentError as e:
        raise type(e)(f"{source}: {e}") from e


def load_state(path: str, settings: Optional[NumericsSettings] = None) -> GaussianState:
    try:
        with open(path, "r") as f:
            text = f.read()
    except OSError as e:
        raise InvalidArgumentError(f"{path}: cannot read state file ({e.strerror})") from e
    return parse_state_json(text, source=path, settings=settings)


def dump_state_json(state: GaussianState) -> str:
    return state_to_document(state).model_dump_json(indent=2)
