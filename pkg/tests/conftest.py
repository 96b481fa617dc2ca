import math

import numpy as np
import pytest
from scipy import integrate

from mog.models.graph_entities import MixedGraph, SeparationQuery
from mog.models.mcar_entities import MCARSpec
from mog.services.matrix_kernels import expm, stability_margin
from mog.services.mcar_model import build_state_space, companion_matrix, reference_model

RANDOM_SEED = 20240611


def _sparse_offdiag(rng, k, prob, low=0.3, high=1.0):
    M = np.zeros((k, k))
    for a in range(k):
        for b in range(k):
            if a != b and rng.random() < prob:
                M[a, b] = rng.choice([-1.0, 1.0]) * round(rng.uniform(low, high), 2)
    return M


def _sparse_covariance(rng, k, prob=0.3):
    S = np.diag(np.round(rng.uniform(1.0, 2.0, size=k), 2))
    for a in range(k):
        for b in range(a + 1, k):
            if rng.random() < prob:
                S[a, b] = S[b, a] = rng.choice([-1.0, 1.0]) * round(rng.uniform(0.2, 0.5), 2)
    min_eig = np.linalg.eigvalsh(S).min()
    if min_eig < 0.2:
        S = S + (0.2 - min_eig + 0.3) * np.eye(k)
    return S


def make_random_model(rng, k, p, prob=0.3, min_decay=0.2):
    """
    Random causal model with sparse coefficients and a sparse positive definite sigma_L.

    Diagonal parts follow the stable scalar polynomial (z + c)^p; off-diagonal
    entries are exact zeros or of magnitude 0.3..1.0 scaled down for p > 1.
    """
    for _ in range(1000):
        c = rng.uniform(1.0, 2.0)
        coeffs = []
        for j in range(1, p + 1):
            diag = math.comb(p, j) * c ** j
            coeffs.append(diag * np.eye(k) + _sparse_offdiag(rng, k, prob) / p)
        spec = MCARSpec.from_arrays(coeffs, _sparse_covariance(rng, k))
        if stability_margin(companion_matrix(spec)) < -min_decay:
            return spec
    raise RuntimeError("could not draw a stable model")


def make_random_graph(rng, n, prob=0.3) -> MixedGraph:
    directed = set()
    undirected = set()
    for a in range(1, n + 1):
        for b in range(1, n + 1):
            if a != b and rng.random() < prob:
                directed.add((a, b))
            if a < b and rng.random() < prob:
                undirected.add((a, b))
    return MixedGraph(n=n, directed=frozenset(directed), undirected=frozenset(undirected))


def make_random_query(rng, n) -> SeparationQuery:
    """Disjoint A, B (nonempty) and C drawn by labelling each vertex."""
    while True:
        labels = rng.integers(0, 4, size=n)
        A = frozenset(v + 1 for v in range(n) if labels[v] == 1)
        B = frozenset(v + 1 for v in range(n) if labels[v] == 2)
        C = frozenset(v + 1 for v in range(n) if labels[v] == 3)
        if A and B:
            return SeparationQuery(A=A, B=B, C=C)


def simpson_gramian(A, W, horizon, panels=10_000):
    """∫_0^horizon e^{Au} W e^{A^T u} du by composite Simpson on a uniform grid."""
    A = np.asarray(A, dtype=float)
    du = horizon / panels
    step = expm(A * du)
    power = np.eye(A.shape[0])
    values = np.empty((panels + 1,) + A.shape)
    for i in range(panels + 1):
        values[i] = power @ W @ power.T
        power = step @ power
    return integrate.simpson(values, dx=du, axis=0)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(RANDOM_SEED))


@pytest.fixture
def random_model():
    return make_random_model


@pytest.fixture
def random_graph():
    return make_random_graph


@pytest.fixture
def random_query():
    return make_random_query


@pytest.fixture
def simpson():
    return simpson_gramian


@pytest.fixture
def reference_spec():
    return reference_model()


@pytest.fixture
def reference_ss(reference_spec):
    return build_state_space(reference_spec)


@pytest.fixture
def reference_og():
    return MixedGraph(
        n=3,
        directed=frozenset({(1, 2), (1, 3), (2, 3), (3, 2)}),
        undirected=frozenset({(1, 2), (1, 3), (2, 3)}),
    )


@pytest.fixture
def reference_local():
    return MixedGraph(
        n=3,
        directed=frozenset({(1, 3), (2, 3), (3, 2)}),
        undirected=frozenset({(1, 3)}),
    )


@pytest.fixture
def scalar_ou():
    """dY = -Y dt + dW."""
    return build_state_space(MCARSpec.from_arrays([[[1.0]]], [[1.0]]))
