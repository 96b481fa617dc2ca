"""
Numerical cross-checks between simulated paths, spectra and the graphs.

- innovation correlations of the exact h-step predictor
- least-squares VAR(1) fit of a sampled state path
- uniform spectral bound d_AB(λ) < I on a frequency grid, plus its λ -> ∞ limit
- spectral mass: ∫ f(λ) dλ = c_YY(0)
"""
from itertools import product
from typing import Iterable, List, Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from mog.models.errors import (
    DegenerateVarianceError,
    InsufficientSamplesError,
    NotStrictError,
    OutOfRangeError,
    QueryInvalidError,
    RankDeficientError,
    ShapeMismatchError,
    SingularBlockError,
)
from mog.models.mcar_entities import AssumptionReport, SamplePath, StateSpace
from mog.services.matrix_kernels import expm, max_norm, symmetrize
from mog.services.mcar_model import STRICT_EIG_FLOOR, spectral_density_grid
from mog.utils.logger import get_logger

logger = get_logger(__name__)

DEGENERATE_VARIANCE = 1e-14
EIGEN_FLOOR = 1e-13
SINGULAR_BLOCK_RCOND = 1e-13
DEFAULT_LAMBDA_MAX = 100.0
DEFAULT_LAMBDA_STEP = 0.05


class VarEstimate(NamedTuple):
    transition: np.ndarray
    noise_cov: np.ndarray


def _check_path(path: SamplePath, ss: StateSpace) -> None:
    if path.states.shape[1] != ss.dim or path.observations.shape[1] != ss.k:
        raise ShapeMismatchError(
            f"path has {path.states.shape[1]} state / {path.observations.shape[1]} observed columns, "
            f"model expects {ss.dim} / {ss.k}"
        )


def innovation_correlation(path: SamplePath, ss: StateSpace) -> np.ndarray:
    """
    Correlation matrix of r_t = Y(t+h) - C e^{Ah} X(t).

    Returns:
        k x k correlation matrix with unit diagonal
    """
    _check_path(path, ss)
    predictor = ss.C @ expm(ss.A * path.h)
    residuals = path.observations[1:] - path.states[:-1] @ predictor.T
    variances = residuals.var(axis=0)
    if np.any(variances < DEGENERATE_VARIANCE):
        bad = [i + 1 for i in np.flatnonzero(variances < DEGENERATE_VARIANCE)]
        raise DegenerateVarianceError(f"residual variance below {DEGENERATE_VARIANCE:g} for component(s) {bad}")
    corr = np.atleast_2d(np.corrcoef(residuals, rowvar=False))
    np.fill_diagonal(corr, 1.0)
    return corr


def estimate_var1(path: SamplePath) -> VarEstimate:
    """
    Regress X(t+h) on X(t) by least squares.

    Returns:
        VarEstimate(transition, noise_cov) with noise_cov the residual
        covariance (divided by the number of transitions)
    """
    dim = path.states.shape[1]
    n = path.n_steps
    if n < 10 * dim * dim:
        raise InsufficientSamplesError(f"need at least {10 * dim * dim} transitions for dimension {dim}, got {n}")

    X0 = path.states[:-1]
    X1 = path.states[1:]
    coef, _, rank, _ = np.linalg.lstsq(X0, X1, rcond=None)
    if rank < dim:
        raise RankDeficientError(f"regressor matrix has rank {rank} < {dim}")
    residuals = X1 - X0 @ coef
    return VarEstimate(transition=coef.T, noise_cov=symmetrize(residuals.T @ residuals / n))


def frequency_grid(lambda_max: float, step: float) -> np.ndarray:
    """Symmetric grid -lambda_max, ..., lambda_max with the given spacing."""
    if lambda_max <= 0 or step <= 0:
        raise ValueError(f"lambda_max and step must be positive, got {lambda_max}, {step}")
    m = int(round(lambda_max / step))
    return np.linspace(-m * step, m * step, 2 * m + 1)


def _require_strict(ss: StateSpace) -> None:
    min_eig = float(np.linalg.eigvalsh(ss.sigma_L).min())
    if min_eig <= STRICT_EIG_FLOOR:
        raise NotStrictError(f"spectral checks need a positive definite sigma_L (min eigenvalue {min_eig:.3e})")


def _validate_pair(k: int, A: Iterable[int], B: Iterable[int]) -> Tuple[List[int], List[int]]:
    A, B = sorted(set(A)), sorted(set(B))
    for v in A + B:
        if not 1 <= v <= k:
            raise OutOfRangeError(f"vertex {v} outside 1..{k}")
    if not A or not B:
        raise QueryInvalidError("A and B must be nonempty")
    if set(A) & set(B):
        raise QueryInvalidError(f"A and B must be disjoint (A={A}, B={B})")
    return A, B


def _inverse_sqrt(M: np.ndarray) -> np.ndarray:
    """Hermitian M^{-1/2} over the leading axis, eigenvalues floored."""
    w, U = np.linalg.eigh(M)
    w = np.maximum(w, EIGEN_FLOOR)
    return (U * (1.0 / np.sqrt(w))[..., None, :]) @ np.conj(np.swapaxes(U, -1, -2))


def _coherence_eigenvalues(f: np.ndarray, A: List[int], B: List[int]) -> np.ndarray:
    """
    Largest eigenvalue of f_AA^{-1/2} f_AB f_BB^{-1} f_BA f_AA^{-1/2} per leading index.

    f: (..., k, k) Hermitian
    """
    a = [v - 1 for v in A]
    b = [v - 1 for v in B]
    f_aa = f[..., a, :][..., :, a]
    f_ab = f[..., a, :][..., :, b]
    f_bb = f[..., b, :][..., :, b]
    f_ba = f[..., b, :][..., :, a]

    bb_eigs = np.linalg.eigvalsh(f_bb)
    ratio = bb_eigs[..., 0] / np.maximum(bb_eigs[..., -1], np.finfo(float).tiny)
    if np.any(ratio < SINGULAR_BLOCK_RCOND):
        raise SingularBlockError(f"spectral block f_BB is numerically singular for B={B}")

    root = _inverse_sqrt(f_aa)
    d = root @ f_ab @ np.linalg.solve(f_bb, f_ba) @ root
    d = 0.5 * (d + np.conj(np.swapaxes(d, -1, -2)))
    return np.linalg.eigvalsh(d)[..., -1]


def _limit_matrix(ss: StateSpace) -> np.ndarray:
    """Leading coefficient of λ^{2p} f(λ) up to 2π: C A^{p-1} B Σ_L B^T (A^T)^{p-1} C^T = Σ_L."""
    lead = ss.C @ np.linalg.matrix_power(ss.A, ss.p - 1) @ ss.B
    return lead @ ss.sigma_L @ lead.T


def _all_splits(k: int) -> List[Tuple[List[int], List[int]]]:
    """All ordered pairs of disjoint nonempty vertex sets."""
    pairs = []
    for labels in product((0, 1, 2), repeat=k):
        A = [v + 1 for v, label in enumerate(labels) if label == 1]
        B = [v + 1 for v, label in enumerate(labels) if label == 2]
        if A and B:
            pairs.append((A, B))
    return pairs


def _singleton_splits(k: int) -> List[Tuple[List[int], List[int]]]:
    return [([v], [w for w in range(1, k + 1) if w != v]) for v in range(1, k + 1)]


def assumption_reports(
    ss: StateSpace,
    pairs: Optional[Sequence[Tuple[Iterable[int], Iterable[int]]]] = None,
    splits: Literal["singleton", "all"] = "singleton",
    lambda_max: float = DEFAULT_LAMBDA_MAX,
    step: float = DEFAULT_LAMBDA_STEP,
) -> List[AssumptionReport]:
    """
    Spectral bound check for several (A, B) pairs on one shared frequency grid.

    Args:
        ss: strict state space
        pairs: explicit (A, B) pairs; default is generated from `splits`
        splits: 'singleton' ({v} vs the rest) or 'all' (every ordered disjoint pair)
        lambda_max: grid half-width
        step: grid spacing

    Returns:
        one AssumptionReport per pair, in input order
    """
    _require_strict(ss)
    if pairs is None:
        pairs = _singleton_splits(ss.k) if splits == "singleton" else _all_splits(ss.k)
    checked = [_validate_pair(ss.k, A, B) for A, B in pairs]

    grid = frequency_grid(lambda_max, step)
    f = spectral_density_grid(ss, grid)
    # d_AB is invariant under rescaling f(λ) by a positive scalar
    trace = np.real(np.trace(f, axis1=1, axis2=2))
    f = f / trace[:, None, None]
    limit = _limit_matrix(ss)
    limit = limit / np.trace(limit)

    reports = []
    for A, B in checked:
        eigs = _coherence_eigenvalues(f, A, B)
        idx = int(np.argmax(eigs))
        sup_eig = max(0.0, float(eigs[idx]))
        limit_eig = max(0.0, float(_coherence_eigenvalues(limit.astype(complex), A, B)))
        satisfied = sup_eig < 1.0 and limit_eig < 1.0
        reports.append(AssumptionReport(
            A=A,
            B=B,
            sup_eig=sup_eig,
            sup_lambda=float(grid[idx]),
            lambda_max=lambda_max,
            step=step,
            limit_eig=limit_eig,
            satisfied=satisfied,
        ))
        logger.debug(f"d_AB check A={A} B={B}: sup_eig={sup_eig:.6g}, limit_eig={limit_eig:.6g}")
    return reports


def assumption_density_check(
    ss: StateSpace,
    A: Iterable[int],
    B: Iterable[int],
    lambda_max: float = DEFAULT_LAMBDA_MAX,
    step: float = DEFAULT_LAMBDA_STEP,
) -> AssumptionReport:
    """Largest eigenvalue of d_AB(λ) over the grid and of its λ -> ∞ limit; satisfied iff both < 1."""
    return assumption_reports(ss, pairs=[(A, B)], lambda_max=lambda_max, step=step)[0]


def spectral_mass_check(ss: StateSpace, lambda_max: float = 200.0, step: float = 0.01) -> float:
    """Max-norm defect between the trapezoid integral of f over the grid and the upper-left k x k block of Γ(0)."""
    _require_strict(ss)
    grid = frequency_grid(lambda_max, step)
    f = spectral_density_grid(ss, grid)
    mass = integrate.trapezoid(np.real(f), grid, axis=0)
    defect = max_norm(mass - ss.gamma0[:ss.k, :ss.k])
    logger.debug(f"spectral mass defect {defect:.3e} on [-{lambda_max:g}, {lambda_max:g}] step {step:g}")
    return defect
