"""
Edge criteria turning MCAR parameters into mixed graphs.

- local orthogonality graph: entries of A_1..A_p and Σ_L
- orthogonality graph: entries of companion powers up to kp - 1
- OU fast path: powers up to k - 1 (p = 1 only)
- sampled graph: e^{Ah} and the Gramian Q(h) of the exactly sampled VAR(1)
- path diagram of a discrete VAR(p) read through its difference coefficients
"""
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from mog.models.errors import BadShapeError, NegativeHorizonError, VertexMismatchError, WrongOrderError
from mog.models.graph_entities import EdgeCriterionReport, EdgeWitness, MixedGraph
from mog.models.mcar_entities import MCARSpec, StateSpace
from mog.services.matrix_kernels import expm, gramian, power_stack
from mog.services.mcar_model import (
    build_state_space,
    predictor_coefficients,
    validate_structure,
    var_difference_coefficients,
)
from mog.utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_TOLERANCE = 1e-9


class _EdgeCollector:
    """Accumulates edges together with the first witness that certified each one."""

    def __init__(self, n: int):
        self.n = n
        self.directed: Set[Tuple[int, int]] = set()
        self.undirected: Set[Tuple[int, int]] = set()
        self.witness: Dict[str, EdgeWitness] = {}

    def add_directed(self, a: int, b: int, index: Tuple[int, int], entry: float) -> None:
        key = f"D {a} {b}"
        self.directed.add((a, b))
        self.witness[key] = EdgeWitness(edge=key, index=index, entry=float(entry))

    def add_undirected(self, a: int, b: int, index: Tuple[int, int], entry: float) -> None:
        key = f"U {a} {b}"
        self.undirected.add((a, b))
        self.witness[key] = EdgeWitness(edge=key, index=index, entry=float(entry))

    def report(self, kind: str, tol: float, h: Optional[float] = None) -> EdgeCriterionReport:
        graph = MixedGraph(n=self.n, directed=frozenset(self.directed), undirected=frozenset(self.undirected))
        logger.debug(
            f"{kind} graph: {len(self.directed)} directed, {len(self.undirected)} undirected edge(s), tol={tol:g}"
        )
        return EdgeCriterionReport(graph=graph, kind=kind, witness=self.witness, tolerance_used=tol, h=h)


def _ordered_pairs(k: int):
    return [(a, b) for a in range(1, k + 1) for b in range(1, k + 1) if a != b]


def _unordered_pairs(k: int):
    return [(a, b) for a in range(1, k + 1) for b in range(a + 1, k + 1)]


def local_orthogonality_graph(spec: MCARSpec, tol: float = DEFAULT_TOLERANCE) -> EdgeCriterionReport:
    """
    Local orthogonality graph read off the model parameters.

    a -> b iff some |[A_j]_{ba}| > tol; a -- b iff |[Σ_L]_{ab}| > tol.
    Strict mode is not required here.

    Args:
        spec: MCAR model
        tol: absolute zero tolerance

    Returns:
        EdgeCriterionReport with witness index (0, j) for directed and (0, 0) for undirected edges
    """
    validate_structure(spec.model_copy(update={"strict": False}))
    coeffs = spec.coefficient_arrays()
    sigma = spec.sigma_array()
    edges = _EdgeCollector(spec.k)

    for a, b in _ordered_pairs(spec.k):
        for j, coeff in enumerate(coeffs, start=1):
            entry = coeff[b - 1, a - 1]
            if abs(entry) > tol:
                edges.add_directed(a, b, (0, j), entry)
                break

    for a, b in _unordered_pairs(spec.k):
        entry = sigma[a - 1, b - 1]
        if abs(entry) > tol:
            edges.add_undirected(a, b, (0, 0), entry)

    return edges.report("local", tol)


def _power_criteria(ss: StateSpace, top: int, tol: float, kind: str) -> EdgeCriterionReport:
    """
    Directed and undirected power criteria with powers of A up to `top`.

    directed a -> b:  |[A^α]_{b, k(j-1)+a}| > tol * s_α,  α = 1..top, j = 1..p
    undirected a -- b: |[C A^α B Σ_L B^T (A^T)^β C^T]_{ab}| > tol * s_α s_β max(1, ‖Σ_L‖),  α, β = 0..top
    with s_α = max(1, ‖A‖_2^α).
    """
    k, p = ss.k, ss.p
    powers = power_stack(ss.A, top)
    norm_a = float(np.linalg.norm(ss.A, 2))
    scales = [max(1.0, norm_a ** alpha) for alpha in range(top + 1)]
    sigma_scale = max(1.0, float(np.linalg.norm(ss.sigma_L, 2)))
    edges = _EdgeCollector(k)

    for a, b in _ordered_pairs(k):
        found = False
        for alpha in range(1, top + 1):
            for j in range(1, p + 1):
                entry = powers[alpha][b - 1, k * (j - 1) + a - 1]
                if abs(entry) > tol * scales[alpha]:
                    edges.add_directed(a, b, (alpha, j), entry)
                    found = True
                    break
            if found:
                break

    # C A^α B for α = 0..top, each k x k
    left = [ss.C @ P @ ss.B for P in powers]
    for a, b in _unordered_pairs(k):
        found = False
        for alpha in range(top + 1):
            row = left[alpha][a - 1, :] @ ss.sigma_L
            for beta in range(top + 1):
                entry = row @ left[beta][b - 1, :]
                if abs(entry) > tol * scales[alpha] * scales[beta] * sigma_scale:
                    edges.add_undirected(a, b, (alpha, beta), entry)
                    found = True
                    break
            if found:
                break

    return edges.report(kind, tol)


def orthogonality_graph(
    spec: MCARSpec,
    tol: float = DEFAULT_TOLERANCE,
    max_power: Optional[int] = None,
) -> EdgeCriterionReport:
    """
    Orthogonality graph of a causal MCAR(p) model with strictly positive definite Σ_L.

    Args:
        spec: MCAR model, validated in strict mode regardless of spec.strict
        tol: relative zero tolerance
        max_power: highest power of A to test (default kp - 1; larger values add no edges)

    Returns:
        EdgeCriterionReport with lexicographically first witnesses (α, j) / (α, β)
    """
    ss = build_state_space(spec.model_copy(update={"strict": True}))
    top = ss.dim - 1 if max_power is None else max_power
    if top < 0:
        raise ValueError(f"max_power must be non-negative, got {max_power}")
    return _power_criteria(ss, top, tol, "og")


def ou_orthogonality_graph(spec: MCARSpec, tol: float = DEFAULT_TOLERANCE) -> EdgeCriterionReport:
    """Orthogonality graph of an Ornstein-Uhlenbeck model using powers up to k - 1 only."""
    if spec.p != 1:
        raise WrongOrderError(f"OU fast path needs p = 1, got p = {spec.p}")
    ss = build_state_space(spec.model_copy(update={"strict": True}))
    return _power_criteria(ss, ss.k - 1, tol, "ou")


def sampled_graph(
    spec: MCARSpec,
    h: float,
    tol: float = DEFAULT_TOLERANCE,
    general_order: bool = False,
) -> EdgeCriterionReport:
    """
    Path diagram of the process observed on the grid 0, h, 2h, ...

    For p = 1: a -> b iff |[e^{Ah}]_{ba}| > tol, a -- b iff |[Q(h)]_{ab}| > tol.
    With general_order (experimental, p >= 1): a -> b iff some |[Θ_j^{(h)}]_{ba}| > tol,
    a -- b iff |[C Q(h) C^T]_{ab}| > tol. No nesting guarantee is attached to that path.

    Raises:
        WrongOrderError: p != 1 without general_order
        NegativeHorizonError: h <= 0
    """
    if spec.p != 1 and not general_order:
        raise WrongOrderError(f"sampled graph needs p = 1, got p = {spec.p} (use general_order for p > 1)")
    if h <= 0:
        raise NegativeHorizonError(f"sampling step must be positive, got {h}")

    ss = build_state_space(spec)
    Q = gramian(ss.A, ss.noise_covariance(), h)
    edges = _EdgeCollector(ss.k)

    if general_order:
        blocks: List[np.ndarray] = predictor_coefficients(ss, h)
        Q = ss.C @ Q @ ss.C.T
    else:
        blocks = [expm(ss.A * h)]

    for a, b in _ordered_pairs(ss.k):
        for j, theta in enumerate(blocks, start=1):
            entry = theta[b - 1, a - 1]
            if abs(entry) > tol:
                edges.add_directed(a, b, (0, j), entry)
                break

    for a, b in _unordered_pairs(ss.k):
        entry = Q[a - 1, b - 1]
        if abs(entry) > tol:
            edges.add_undirected(a, b, (0, 0), entry)

    return edges.report("sampled", tol, h=h)


def var_path_diagram(phis, noise_cov=None, tol: float = DEFAULT_TOLERANCE) -> EdgeCriterionReport:
    """
    Path diagram of a discrete VAR(p) with lag matrices Φ_1..Φ_p.

    a -> b iff some |[Θ_j]_{ba}| > tol for the difference coefficients Θ_j,
    which selects the same pairs as the lag rule [Φ_n]_{ba} != 0.
    a -- b iff |[Σ_ε]_{ab}| > tol when the innovation covariance is given.

    Returns:
        EdgeCriterionReport of kind "var" with witness index (0, j) / (0, 0)
    """
    thetas = var_difference_coefficients(phis)
    k = thetas[0].shape[0]
    edges = _EdgeCollector(k)

    for a, b in _ordered_pairs(k):
        for j, theta in enumerate(thetas, start=1):
            entry = theta[b - 1, a - 1]
            if abs(entry) > tol:
                edges.add_directed(a, b, (0, j), entry)
                break

    if noise_cov is not None:
        sigma = np.asarray(noise_cov, dtype=float)
        if sigma.shape != (k, k):
            raise BadShapeError(f"innovation covariance has shape {sigma.shape}, expected ({k}, {k})")
        for a, b in _unordered_pairs(k):
            entry = sigma[a - 1, b - 1]
            if abs(entry) > tol:
                edges.add_undirected(a, b, (0, 0), entry)

    return edges.report("var", tol)


def check_nesting(inner: MixedGraph, outer: MixedGraph) -> bool:
    """True iff every edge of inner is also an edge of outer."""
    if inner.n != outer.n:
        raise VertexMismatchError(f"graphs have different vertex sets: {inner.n} vs {outer.n} vertices")
    return inner.directed <= outer.directed and inner.undirected <= outer.undirected
