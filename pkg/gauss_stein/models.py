from enum import Enum
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_validator

# Default relative slack admitting boundary (pure) standard-form triples.
STANDARD_FORM_SLACK = 1.0e-12


def readonly_array(value, dtype=float) -> np.ndarray:
    arr = np.array(value, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


class FrozenArrayModel(BaseModel):
    """Base for immutable records that carry numpy arrays."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


# --- Settings records ---
class NumericsSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    symmetry_tol: float = Field(1.0e-10, gt=0)
    validity_tol: float = Field(1.0e-9, gt=0)
    pure_tol: float = Field(1.0e-10, gt=0)
    pairing_tol: float = Field(1.0e-10, gt=0)
    imag_tol: float = Field(1.0e-10, gt=0)
    reconstruction_tol: float = Field(1.0e-9, gt=0)
    mean_zero_tol: float = Field(1.0e-12, gt=0)
    standard_form_slack: float = Field(STANDARD_FORM_SLACK, ge=0)


class OracleSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    truncation_budget: float = Field(1.0e-8, gt=0)
    eig_floor: float = Field(1.0e-13, gt=0)
    single_mode_cutoff: int = Field(80, ge=2)
    multi_mode_cutoff: int = Field(20, ge=2)
    unreliable_weight: float = Field(1.0e-10, gt=0)
    d_tol: float = Field(1.0e-4, gt=0)
    v_tol: float = Field(1.0e-3, gt=0)
    stability_tol: float = Field(1.0e-6, gt=0)


class IlluminationSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    epsilon: float = Field(0.001, gt=0, lt=1)
    m_max: int = Field(1_000_000, ge=1)
    m_points: int = Field(61, ge=1)
    workers: int = Field(4, ge=1)


class OutputSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    significant_digits: int = Field(12, ge=1, le=17)


class AppSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    numerics: NumericsSettings = NumericsSettings()
    oracle: OracleSettings = OracleSettings()
    illumination: IlluminationSettings = IlluminationSettings()
    output: OutputSettings = OutputSettings()


# --- Domain parameters ---
class StandardFormParams(BaseModel):
    """Two-mode standard form [[a,c],[c,b]] (+) [[a,-c],[-c,b]]."""
    model_config = ConfigDict(frozen=True)

    a: float = Field(..., ge=0.5)
    b: float = Field(..., ge=0.5)
    c: float = 0.0

    @property
    def c_max(self) -> float:
        return min(
            np.sqrt(max(0.0, (self.a - 0.5) * (self.b + 0.5))),
            np.sqrt(max(0.0, (self.a + 0.5) * (self.b - 0.5))),
        )

    @model_validator(mode="after")
    def _check_constraint(self, info: ValidationInfo):
        # numerics.standard_form_slack arrives through the validation context
        slack = (info.context or {}).get("standard_form_slack", STANDARD_FORM_SLACK)
        if abs(self.c) > self.c_max + slack * max(1.0, self.c_max):
            raise ValueError(
                f"|c|={abs(self.c):.6g} exceeds the standard-form bound {self.c_max:.6g} "
                f"for a={self.a:.6g}, b={self.b:.6g}"
            )
        return self


class IlluminationParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_s: float = Field(..., ge=0)
    n_b: float = Field(..., gt=0)
    eta: float = Field(..., gt=0, le=1)  # the entangled transmitter rejects eta = 1
    epsilon: float = Field(0.001, gt=0, lt=1)


# --- Reports ---
class FormulaRoute(str, Enum):
    GENERAL = "general"
    ALTERNATE = "alternate"
    STANDARD_FORM = "standard_form"
    G_FORM = "g_form"


class ValidationReport(BaseModel):
    passed: bool
    symmetry_residual: float
    min_symplectic_eigenvalue: float
    message: str = ""


class DivergenceReport(BaseModel):
    relative_entropy: float
    variance: float
    gamma: List[float]
    gamma_norm: Optional[float] = None
    formula_route: FormulaRoute
    relative_entropy_route: FormulaRoute = FormulaRoute.GENERAL
    nu_rho: List[float] = []
    nu_sigma: List[float] = []
    g_rho: Optional[List[List[float]]] = None
    g_sigma: Optional[List[List[float]]] = None
    z_rho: Optional[float] = None
    z_sigma: Optional[float] = None


class ExponentPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    trials: int = Field(..., ge=1)
    epsilon: float = Field(..., gt=0, lt=1)
    r_first: float
    r_second: float


# --- I/O documents ---
class StateDocument(BaseModel):
    """JSON state document. Quadratures ordered xxpp, vacuum variance 1/2."""
    model_config = ConfigDict(extra="forbid")

    n_modes: int = Field(..., ge=1)
    ordering: Literal["xxpp"] = "xxpp"
    hbar_vacuum_variance: Literal[0.5] = 0.5
    mean: List[float]
    cov: List[List[float]]

    @field_validator("cov")
    @classmethod
    def _square(cls, cov):
        if any(len(row) != len(cov) for row in cov):
            raise ValueError("cov must be a square matrix")
        return cov

    @model_validator(mode="after")
    def _dimensions(self):
        dim = 2 * self.n_modes
        if len(self.mean) != dim or len(self.cov) != dim:
            raise ValueError(
                f"n_modes={self.n_modes} needs mean of length {dim} and a {dim}x{dim} cov"
            )
        return self


class Scenario(BaseModel):
    name: str
    kind: Literal["thermal", "coherent", "qi"]
    description: str = ""
    n_s: Optional[float] = None
    n_b: Optional[float] = None
    eta: Optional[float] = None
    epsilon: float = 0.001
    n_rho: Optional[float] = None
    n_sigma: Optional[float] = None
    cutoff: Optional[int] = None
    oracle: bool = False
    d_tol: Optional[float] = None
    v_tol: Optional[float] = None

    @model_validator(mode="after")
    def _required_fields(self):
        if self.kind == "thermal":
            if self.n_rho is None or self.n_sigma is None:
                raise ValueError(f"thermal scenario '{self.name}' needs n_rho and n_sigma")
        elif None in (self.n_s, self.n_b, self.eta):
            raise ValueError(f"{self.kind} scenario '{self.name}' needs n_s, n_b and eta")
        return self

    def illumination_params(self) -> IlluminationParams:
        return IlluminationParams(
            n_s=self.n_s, n_b=self.n_b, eta=self.eta, epsilon=self.epsilon
        )


class OracleResult(BaseModel):
    relative_entropy: float
    variance: float
    clamped_rho: int
    clamped_sigma: int
    sigma_clamped_weight: float


class OracleReport(BaseModel):
    scenario: str
    inputs: dict
    cutoffs: List[int]
    truncation_budget: float
    eig_floor: float
    trace_deficits: dict
    clamp_counts: dict
    oracle_d: float
    oracle_v: float
    formula_d: float
    formula_v: float
    d_tol: float
    v_tol: float
    stability_d: float
    stability_v: float
    stability_tol: float
    passed: bool
