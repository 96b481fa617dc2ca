"""
Dense real-matrix primitives shared by every other service.

- matrix exponential (scaling and squaring with Padé approximant, scipy)
- stability margin (largest real part of the spectrum)
- continuous Lyapunov equation by Kronecker vectorisation
- finite-horizon Gramian by the Van Loan block exponential
- power stacks M^0..M^n
"""
import math
from typing import List

import numpy as np
from scipy import linalg

from mog.models.errors import (
    BadShapeError,
    CholeskyFailureError,
    EigenFailureError,
    NegativeHorizonError,
    NonFiniteError,
    NotSymmetricError,
    UnstableError,
)
from mog.utils.logger import get_logger

logger = get_logger(__name__)

SYMMETRY_TOL = 1e-12
LYAPUNOV_RESIDUAL_TOL = 1e-10


def as_square(M, name: str = "matrix") -> np.ndarray:
    """
    Convert input to a finite float square matrix.

    Args:
        M: array-like
        name: name used in error messages

    Returns:
        2-D float ndarray
    """
    arr = np.array(M, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise BadShapeError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf entries")
    return arr


def symmetrize(X: np.ndarray) -> np.ndarray:
    """Return (X + X^T) / 2."""
    return 0.5 * (X + X.T)


def max_norm(X: np.ndarray) -> float:
    """Largest absolute entry."""
    return float(np.max(np.abs(X))) if X.size else 0.0


def check_symmetric(W: np.ndarray, name: str = "matrix") -> None:
    scale = max(1.0, max_norm(W))
    if max_norm(W - W.T) > SYMMETRY_TOL * scale:
        raise NotSymmetricError(f"{name} is not symmetric (max asymmetry {max_norm(W - W.T):.3e})")


def expm(M) -> np.ndarray:
    """
    Matrix exponential e^M.

    Args:
        M: square real matrix

    Returns:
        e^M as ndarray
    """
    arr = as_square(M)
    return linalg.expm(arr)


def stability_margin(M) -> float:
    """
    Largest real part over the eigenvalues of M.

    Negative means the continuous-time system dX = M X dt is stable.
    """
    arr = as_square(M)
    try:
        eigenvalues = np.linalg.eigvals(arr)
    except np.linalg.LinAlgError as e:
        raise EigenFailureError(f"eigenvalue computation did not converge: {e}") from e
    return float(np.max(eigenvalues.real))


def solve_lyapunov(A, W) -> np.ndarray:
    """
    Solve A Γ + Γ A^T = -W for a stable A.

    The equation is vectorised as (A ⊗ I + I ⊗ A) vec(Γ) = -vec(W); the
    n^2 x n^2 system limits this to small state dimensions.

    Args:
        A: stable square matrix
        W: symmetric positive semi-definite forcing

    Returns:
        symmetric solution Γ
    """
    A = as_square(A, "A")
    W = as_square(W, "W")
    if W.shape != A.shape:
        raise BadShapeError(f"W shape {W.shape} does not match A shape {A.shape}")
    check_symmetric(W, "W")

    margin = stability_margin(A)
    if margin >= 0:
        raise UnstableError(f"Lyapunov equation needs a stable matrix, stability margin is {margin:.6g}")

    n = A.shape[0]
    identity = np.eye(n)
    kron_sum = np.kron(A, identity) + np.kron(identity, A)
    gamma = np.linalg.solve(kron_sum, -W.reshape(-1)).reshape(n, n)
    gamma = symmetrize(gamma)

    residual = max_norm(A @ gamma + gamma @ A.T + W)
    bound = LYAPUNOV_RESIDUAL_TOL * (np.linalg.norm(A, 2) * np.linalg.norm(gamma, 2) + np.linalg.norm(W, 2))
    if residual > bound and residual > np.finfo(float).eps:
        logger.warning(f"Lyapunov residual {residual:.3e} exceeds bound {bound:.3e}")
    else:
        logger.debug(f"Lyapunov residual {residual:.3e}")
    return gamma


def gramian(A, W, h: float) -> np.ndarray:
    """
    Finite-horizon Gramian Q(h) = ∫_0^h e^{Au} W e^{A^T u} du.

    Van Loan construction: with F = expm([[A, W], [0, -A^T]] t) the upper
    blocks satisfy F12 F11^T = Q(t). The block exponential is only formed for
    t = h / 2^s with ‖A‖ t <= 1; the horizon is then recovered by doubling,
    Q(2t) = Q(t) + e^{At} Q(t) e^{A^T t}, which keeps long horizons accurate.

    Args:
        A: square matrix (stability not required)
        W: symmetric positive semi-definite matrix
        h: horizon, h >= 0

    Returns:
        symmetric Q(h)
    """
    if h < 0:
        raise NegativeHorizonError(f"horizon must be non-negative, got {h}")
    A = as_square(A, "A")
    W = as_square(W, "W")
    if W.shape != A.shape:
        raise BadShapeError(f"W shape {W.shape} does not match A shape {A.shape}")
    check_symmetric(W, "W")

    n = A.shape[0]
    if h == 0:
        return np.zeros((n, n))

    scaled = np.linalg.norm(A, 1) * h
    squarings = max(0, math.ceil(math.log2(scaled))) if scaled > 1.0 else 0
    t = h / 2 ** squarings

    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = A
    block[:n, n:] = W
    block[n:, n:] = -A.T
    F = linalg.expm(block * t)
    E = F[:n, :n]
    Q = symmetrize(F[:n, n:] @ E.T)
    for _ in range(squarings):
        Q = symmetrize(Q + E @ Q @ E.T)
        E = E @ E
    if squarings:
        logger.debug(f"gramian: horizon {h:g} reached by {squarings} doubling step(s)")
    return Q


def power_stack(M, n: int) -> List[np.ndarray]:
    """
    Powers [M^0, M^1, ..., M^n] by repeated multiplication.

    Args:
        M: square matrix
        n: highest power, n >= 0
    """
    if n < 0:
        raise ValueError(f"power must be non-negative, got {n}")
    arr = as_square(M)
    powers = [np.eye(arr.shape[0])]
    for _ in range(n):
        powers.append(arr @ powers[-1])
    return powers


def psd_factor(S: np.ndarray, name: str = "covariance", rel_tol: float = 1e-8) -> np.ndarray:
    """
    Factor a symmetric PSD matrix as L L^T via the eigendecomposition.

    Negative eigenvalues down to -rel_tol * max(1, λ_max) are roundoff and are
    clipped to zero; anything more negative raises CholeskyFailureError.
    """
    S = symmetrize(np.asarray(S, dtype=float))
    eigenvalues, eigenvectors = np.linalg.eigh(S)
    floor = -rel_tol * max(1.0, float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 1.0)
    if eigenvalues.size and eigenvalues.min() < floor:
        raise CholeskyFailureError(f"{name} is indefinite (min eigenvalue {eigenvalues.min():.3e})")
    clipped = np.clip(eigenvalues, 0.0, None)
    if eigenvalues.size and np.any(eigenvalues < 0):
        logger.debug(f"{name}: clipped {int(np.sum(eigenvalues < 0))} negative eigenvalue(s)")
    return eigenvectors * np.sqrt(clipped)
