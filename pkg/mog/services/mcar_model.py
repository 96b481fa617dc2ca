"""
MCAR(p) model construction and derived quantities.

- companion form (A, B, C) and stationary covariance Γ(0)
- autocovariance c_XX(t) = e^{At} Γ(0)
- spectral density (resolvent form, polynomial form as cross-check)
- h-step predictor coefficients Θ_j^{(h)} = C e^{Ah} E_j
- exact sampled dynamics X((n+1)h) = e^{Ah} X(nh) + ε
- difference form of a discrete VAR(p)
- YAML model files
"""
import math
from pathlib import Path
from typing import List, NamedTuple, Union

import numpy as np
import yaml
from pydantic import ValidationError

from mog.models.errors import (
    BadShapeError,
    ModelFileError,
    NegativeHorizonError,
    NotStrictError,
    SingularResolventError,
    UnstableError,
)
from mog.models.mcar_entities import MCARSpec, ModelValidation, StateSpace
from mog.services.matrix_kernels import (
    as_square,
    check_symmetric,
    expm,
    gramian,
    solve_lyapunov,
    stability_margin,
)
from mog.utils.logger import get_logger

logger = get_logger(__name__)

STRICT_EIG_FLOOR = 1e-10

# Ornstein-Uhlenbeck example of the two-graph comparison (drift matrix and Lévy covariance)
REFERENCE_DRIFT = [[-2.0, 0.0, 0.0], [0.0, -2.0, 1.0], [1.0, 1.0, -2.0]]
REFERENCE_SIGMA = [[1.0, 0.0, 0.5], [0.0, 1.0, 0.0], [0.5, 0.0, 1.0]]


class SampledVar1(NamedTuple):
    transition: np.ndarray
    noise_cov: np.ndarray


def reference_model() -> MCARSpec:
    """3-dimensional OU model whose orthogonality graphs are the reference example."""
    drift = np.array(REFERENCE_DRIFT)
    return MCARSpec.from_arrays([-drift], REFERENCE_SIGMA)


def validate_structure(spec: MCARSpec) -> None:
    """
    Check shapes, symmetry and (in strict mode) positive definiteness of Σ_L.

    Raises:
        BadShapeError, NotSymmetricError, NotStrictError
    """
    if len(spec.ar_coeffs) != spec.p:
        raise BadShapeError(f"expected {spec.p} coefficient matrices, got {len(spec.ar_coeffs)}")
    for j, coeff in enumerate(spec.coefficient_arrays(), start=1):
        if coeff.shape != (spec.k, spec.k):
            raise BadShapeError(f"A_{j} has shape {coeff.shape}, expected ({spec.k}, {spec.k})")
        as_square(coeff, f"A_{j}")
    sigma = spec.sigma_array()
    if sigma.shape != (spec.k, spec.k):
        raise BadShapeError(f"sigma_L has shape {sigma.shape}, expected ({spec.k}, {spec.k})")
    as_square(sigma, "sigma_L")
    check_symmetric(sigma, "sigma_L")
    min_eig = float(np.linalg.eigvalsh(sigma).min())
    if min_eig < -1e-12 * max(1.0, float(np.abs(sigma).max())):
        raise NotStrictError(f"sigma_L is not positive semi-definite (min eigenvalue {min_eig:.3e})")
    if spec.strict and min_eig <= STRICT_EIG_FLOOR:
        raise NotStrictError(f"sigma_L must be positive definite in strict mode (min eigenvalue {min_eig:.3e})")


def companion_matrix(spec: MCARSpec) -> np.ndarray:
    """
    Block companion matrix: identity blocks on the super-diagonal, last block
    row (-A_p, ..., -A_1).
    """
    k, p = spec.k, spec.p
    coeffs = spec.coefficient_arrays()
    A = np.zeros((k * p, k * p))
    for i in range(p - 1):
        A[i * k:(i + 1) * k, (i + 1) * k:(i + 2) * k] = np.eye(k)
    for j in range(p):
        # block column j holds -A_{p-j}
        A[(p - 1) * k:, j * k:(j + 1) * k] = -coeffs[p - 1 - j]
    return A


def selector(k: int, p: int, j: int) -> np.ndarray:
    """E_j (kp x k) with E_j^T = (0_{k x k(j-1)}, I_k, 0_{k x k(p-j)})."""
    if not 1 <= j <= p:
        raise ValueError(f"block index j must be in 1..{p}, got {j}")
    E = np.zeros((k * p, k))
    E[(j - 1) * k:j * k, :] = np.eye(k)
    return E


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


def build_state_space(spec: MCARSpec) -> StateSpace:
    """
    Companion state space of a causal MCAR(p) model.

    For p = 1 this is the Ornstein-Uhlenbeck case A = -A_1, B = C = I_k.

    Raises:
        BadShapeError: inconsistent shapes
        UnstableError: the companion matrix is not stable (model not causal)
        NotStrictError: Σ_L not positive definite while spec.strict is set
    """
    validate_structure(spec)
    k, p = spec.k, spec.p
    A = companion_matrix(spec)
    margin = stability_margin(A)
    if margin >= 0:
        raise UnstableError(f"MCAR model is not causal: stability margin {margin:.6g} >= 0")

    B = np.zeros((k * p, k))
    B[(p - 1) * k:, :] = np.eye(k)
    C = np.zeros((k, k * p))
    C[:, :k] = np.eye(k)
    sigma = spec.sigma_array()

    gamma0 = solve_lyapunov(A, B @ sigma @ B.T)
    logger.debug(f"Built state space k={k}, p={p}, margin={margin:.6g}")

    return StateSpace(
        k=k,
        p=p,
        A=_frozen(A),
        B=_frozen(B),
        C=_frozen(C),
        sigma_L=_frozen(sigma),
        gamma0=_frozen(gamma0),
    )


def validate_model(spec: MCARSpec) -> ModelValidation:
    """Stability and strictness summary without solving for Γ(0)."""
    relaxed = spec.model_copy(update={"strict": False})
    validate_structure(relaxed)
    margin = stability_margin(companion_matrix(spec))
    min_eig = float(np.linalg.eigvalsh(spec.sigma_array()).min())
    return ModelValidation(
        k=spec.k,
        p=spec.p,
        margin=margin,
        sigma_min_eig=min_eig,
        causal=margin < 0,
        strict_ok=min_eig > STRICT_EIG_FLOOR,
    )


def autocovariance(ss: StateSpace, t: float) -> np.ndarray:
    """c_XX(t) = e^{At} Γ(0) for t >= 0 and c_XX(-t)^T for t < 0."""
    if t < 0:
        return autocovariance(ss, -t).T
    return expm(ss.A * t) @ ss.gamma0


def spectral_density(ss: StateSpace, lam: float) -> np.ndarray:
    """
    Spectral density of Y at frequency λ (resolvent form):
    f(λ) = (1/2π) C (iλI - A)^{-1} B Σ_L B^T (-iλI - A^T)^{-1} C^T.
    """
    return spectral_density_grid(ss, np.array([lam]))[0]


def spectral_density_grid(ss: StateSpace, lambdas) -> np.ndarray:
    """
    Resolvent-form spectral density on a grid, shape (len(lambdas), k, k).

    All grid points are solved in one batched call.
    """
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    n = ss.dim
    resolvent = 1j * lambdas[:, None, None] * np.eye(n)[None, :, :] - ss.A[None, :, :]
    rhs = np.broadcast_to(ss.B.astype(complex), (lambdas.size, n, ss.k))
    try:
        R = np.linalg.solve(resolvent, rhs)
    except np.linalg.LinAlgError as e:
        raise SingularResolventError(f"iλ is an eigenvalue of A: {e}") from e
    G = ss.C[None, :, :] @ R  # transfer function, (m, k, k)
    f = G @ ss.sigma_L[None, :, :] @ np.conj(np.transpose(G, (0, 2, 1))) / (2 * math.pi)
    # exact Hermitian symmetry
    return 0.5 * (f + np.conj(np.transpose(f, (0, 2, 1))))


def characteristic_polynomial(ss: StateSpace, z: complex) -> np.ndarray:
    """P(z) = I z^p + A_1 z^{p-1} + ... + A_p."""
    P = np.eye(ss.k, dtype=complex) * z ** ss.p
    for j in range(1, ss.p + 1):
        P = P + ss.ar_coefficient(j) * z ** (ss.p - j)
    return P


def spectral_density_polynomial(ss: StateSpace, lam: float) -> np.ndarray:
    """Polynomial form f(λ) = (1/2π) P(iλ)^{-1} Σ_L (P(-iλ)^{-1})^T."""
    P_plus = np.linalg.inv(characteristic_polynomial(ss, 1j * lam))
    P_minus = np.linalg.inv(characteristic_polynomial(ss, -1j * lam))
    return P_plus @ ss.sigma_L @ P_minus.T / (2 * math.pi)


def predictor_coefficients(ss: StateSpace, h: float) -> List[np.ndarray]:
    """
    Θ_j^{(h)} = C e^{Ah} E_j, j = 1..p.

    C e^{Ah} X(t) = Σ_j Θ_j^{(h)} X_j(t) is the best linear h-step predictor of Y.
    """
    if h < 0:
        raise NegativeHorizonError(f"prediction horizon must be non-negative, got {h}")
    CeAh = ss.C @ expm(ss.A * h)
    k = ss.k
    return [CeAh[:, j * k:(j + 1) * k].copy() for j in range(ss.p)]


def var_difference_coefficients(phis) -> List[np.ndarray]:
    """
    Coefficients of a discrete VAR(p) written in differences instead of lags.

    Z(t+1) = Σ_n Φ_n Z(t+1-n) + ε(t+1) equals Σ_j Θ_j D^{j-1} Z(t) + ε(t+1)
    with D Z(t) = Z(t) - Z(t-1) and

        Θ_j = (-1)^{j-1} Σ_{n=j}^{p} C(n-1, j-1) Φ_n,   j = 1..p.

    The map is triangular with unit diagonal up to sign, so [Θ_j]_{ba} = 0 for
    all j iff [Φ_n]_{ba} = 0 for all n.

    Args:
        phis: Φ_1 .. Φ_p, each k x k

    Returns:
        [Θ_1, ..., Θ_p]
    """
    blocks = [as_square(phi, f"Phi_{n}") for n, phi in enumerate(phis, start=1)]
    if not blocks:
        raise BadShapeError("need at least one VAR coefficient matrix")
    shape = blocks[0].shape
    for n, phi in enumerate(blocks, start=1):
        if phi.shape != shape:
            raise BadShapeError(f"Phi_{n} has shape {phi.shape}, expected {shape}")
    p = len(blocks)
    return [
        (-1) ** (j - 1) * sum(math.comb(n - 1, j - 1) * blocks[n - 1] for n in range(j, p + 1))
        for j in range(1, p + 1)
    ]


def sampled_var1(ss: StateSpace, h: float) -> SampledVar1:
    """
    Exact VAR(1) dynamics of the state sampled at spacing h:
    X((n+1)h) = e^{Ah} X(nh) + ε_n, ε_n ~ (0, Q(h)).
    """
    if h <= 0:
        raise NegativeHorizonError(f"sampling step must be positive, got {h}")
    return SampledVar1(
        transition=expm(ss.A * h),
        noise_cov=gramian(ss.A, ss.noise_covariance(), h),
    )


def load_model_file(path: Union[str, Path]) -> MCARSpec:
    """
    Read a YAML model file with keys k, p, ar_coeffs, sigma_L and optional strict.

    Raises:
        ModelFileError: unreadable file, bad YAML, missing keys or non-numeric entries
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ModelFileError(f"cannot read model file {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ModelFileError(f"invalid YAML in {path}: {e}") from e

    if not isinstance(data, dict):
        raise ModelFileError(f"model file {path} must contain a mapping")
    missing = [key for key in ("k", "p", "ar_coeffs", "sigma_L") if key not in data]
    if missing:
        raise ModelFileError(f"model file {path} is missing keys: {', '.join(missing)}")

    try:
        spec = MCARSpec(**data)
    except ValidationError as e:
        raise ModelFileError(f"invalid model file {path}: {e.error_count()} error(s): {e.errors()[0]['msg']}") from e
    logger.debug(f"Loaded model file {path}: k={spec.k}, p={spec.p}, strict={spec.strict}")
    return spec


def dump_model(spec: MCARSpec) -> str:
    """YAML text for a spec, loadable by load_model_file."""
    return yaml.safe_dump(spec.model_dump(), sort_keys=False, default_flow_style=None)
