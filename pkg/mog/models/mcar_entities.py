from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


def _require_rectangular(rows: list[list[float]], name: str) -> None:
    lengths = sorted({len(row) for row in rows})
    if len(lengths) > 1:
        raise ValueError(f"{name} is not rectangular: row lengths {lengths}")


class MCARSpec(BaseModel):
    """User-facing MCAR(p) model: P(λ) = I λ^p + A_1 λ^{p-1} + ... + A_p driven by L with E[L(1)L(1)^T] = Σ_L."""

    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=1)  # process dimension
    p: int = Field(ge=1)  # AR order
    ar_coeffs: list[list[list[float]]]  # A_1 .. A_p, each k x k row-major
    sigma_L: list[list[float]]  # Lévy covariance, k x k row-major
    strict: bool = True  # reject Σ_L that is not strictly positive definite

    @model_validator(mode="after")
    def _rectangular(self) -> "MCARSpec":
        for j, coeff in enumerate(self.ar_coeffs, start=1):
            _require_rectangular(coeff, f"A_{j}")
        _require_rectangular(self.sigma_L, "sigma_L")
        return self

    @classmethod
    def from_arrays(cls, ar_coeffs, sigma_L, strict: bool = True) -> "MCARSpec":
        """Build a spec from numpy-like coefficient matrices; k and p are inferred."""
        coeffs = [np.atleast_2d(np.asarray(a, dtype=float)) for a in ar_coeffs]
        sigma = np.atleast_2d(np.asarray(sigma_L, dtype=float))
        return cls(
            k=sigma.shape[0],
            p=len(coeffs),
            ar_coeffs=[c.tolist() for c in coeffs],
            sigma_L=sigma.tolist(),
            strict=strict,
        )

    def coefficient_arrays(self) -> list[np.ndarray]:
        return [np.array(a, dtype=float) for a in self.ar_coeffs]

    def sigma_array(self) -> np.ndarray:
        return np.array(self.sigma_L, dtype=float)


class StateSpace(BaseModel):
    """Companion triple (A, B, C) of an MCAR(p) model with its stationary covariance Γ(0)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    k: int
    p: int
    A: np.ndarray  # kp x kp companion matrix
    B: np.ndarray  # kp x k, B^T = (0, ..., 0, I_k)
    C: np.ndarray  # k x kp, C = (I_k, 0, ..., 0)
    sigma_L: np.ndarray  # k x k
    gamma0: np.ndarray  # kp x kp stationary state covariance

    @property
    def dim(self) -> int:
        return self.k * self.p

    def noise_covariance(self) -> np.ndarray:
        """State-level forcing B Σ_L B^T."""
        return self.B @ self.sigma_L @ self.B.T

    def ar_coefficient(self, j: int) -> np.ndarray:
        """A_j read back from the last block row (which holds -A_p ... -A_1)."""
        k, p = self.k, self.p
        col = (p - j) * k
        return -self.A[(p - 1) * k:, col:col + k]


class ModelValidation(BaseModel):
    """Summary printed by the `validate` command."""

    k: int
    p: int
    margin: float
    sigma_min_eig: float
    causal: bool
    strict_ok: bool

    @property
    def ok(self) -> bool:
        return self.causal and self.strict_ok


class BrownianDriver(BaseModel):
    """Brownian motion with E[L(1)L(1)^T] = cov."""

    kind: Literal["brownian"] = "brownian"
    cov: list[list[float]]

    def levy_covariance(self) -> np.ndarray:
        return np.array(self.cov, dtype=float)


class CompoundPoissonDriver(BaseModel):
    """Compound Poisson process with zero-mean Gaussian jumps."""

    kind: Literal["cpoisson"] = "cpoisson"
    rate: float = Field(ge=0)  # jumps per unit time
    jump_cov: list[list[float]]

    def levy_covariance(self) -> np.ndarray:
        return self.rate * np.array(self.jump_cov, dtype=float)


class SumDriver(BaseModel):
    """Independent sum of drivers."""

    kind: Literal["sum"] = "sum"
    components: list["LevyDriver"]

    def levy_covariance(self) -> np.ndarray:
        return sum(c.levy_covariance() for c in self.components)


LevyDriver = Annotated[
    Union[BrownianDriver, CompoundPoissonDriver, SumDriver],
    Field(discriminator="kind"),
]

SumDriver.model_rebuild()


class SamplePath(BaseModel):
    """Simulated path on the grid 0, h, ..., n_steps h."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    h: float
    n_steps: int
    states: np.ndarray  # (n_steps + 1) x kp
    observations: np.ndarray  # (n_steps + 1) x k, Y = C X
    seed: int
    driver: str = "brownian"
    warnings: list[str] = []

    @property
    def times(self) -> np.ndarray:
        return self.h * np.arange(self.n_steps + 1)


class AssumptionReport(BaseModel):
    """Numerical check of the uniform spectral bound d_AB(λ) < I for one (A, B) pair."""

    A: list[int]
    B: list[int]
    sup_eig: float  # largest eigenvalue of d_AB(λ) over the grid
    sup_lambda: float  # grid point attaining sup_eig
    lambda_max: float
    step: float
    limit_eig: float  # largest eigenvalue of the λ -> ∞ limit matrix
    satisfied: bool
    note: Optional[str] = None

    def to_text(self) -> str:
        a = ",".join(str(v) for v in self.A)
        b = ",".join(str(v) for v in self.B)
        lines = [
            f"pair: A={a} B={b}",
            f"grid: [-{self.lambda_max:g}, {self.lambda_max:g}] step {self.step:g}",
            f"sup_eig: {self.sup_eig:.12f} at lambda={self.sup_lambda:.6g}",
            f"limit_eig: {self.limit_eig:.12f}",
            f"satisfied: {'true' if self.satisfied else 'false'}",
        ]
        if self.note:
            lines.append(f"note: {self.note}")
        return "\n".join(lines)
