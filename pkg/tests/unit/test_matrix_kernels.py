import math

import numpy as np
import pytest

from mog.models.errors import (
    BadShapeError,
    CholeskyFailureError,
    NegativeHorizonError,
    NonFiniteError,
    NotSymmetricError,
    UnstableError,
)
from mog.services.matrix_kernels import (
    as_square,
    check_symmetric,
    expm,
    gramian,
    power_stack,
    psd_factor,
    solve_lyapunov,
    stability_margin,
)

DRIFT = np.array([[-2.0, 0.0, 0.0], [0.0, -2.0, 1.0], [1.0, 1.0, -2.0]])
SIGMA = np.array([[1.0, 0.0, 0.5], [0.0, 1.0, 0.0], [0.5, 0.0, 1.0]])


def test_as_square_rejects_bad_input():
    with pytest.raises(BadShapeError):
        as_square(np.zeros((2, 3)))
    with pytest.raises(NonFiniteError):
        as_square([[1.0, np.nan], [0.0, 1.0]])
    assert as_square(2.0).shape == (1, 1)


def test_expm_of_diagonal_matrix():
    # Given
    D = np.diag([-1.0, 0.5, 2.0])

    # When
    E = expm(D)

    # Then
    np.testing.assert_allclose(E, np.diag(np.exp([-1.0, 0.5, 2.0])), rtol=1e-14)


def test_expm_of_zero_and_nilpotent_matrices():
    np.testing.assert_allclose(expm(np.zeros((3, 3))), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(expm([[0.0, 1.0], [0.0, 0.0]]), [[1.0, 1.0], [0.0, 1.0]], atol=1e-15)


def test_expm_inverse_on_random_matrices(rng):
    for _ in range(50):
        # Given
        M = rng.normal(size=(3, 3))
        M *= rng.uniform(0.0, 5.0) / np.linalg.norm(M, 2)

        # When
        product = expm(M) @ expm(-M)

        # Then
        np.testing.assert_allclose(product, np.eye(3), atol=1e-9)


def test_stability_margin_of_reference_drift():
    # eigenvalues -1, -2, -3
    assert stability_margin(DRIFT) == pytest.approx(-1.0, abs=1e-12)
    assert stability_margin(np.array([[0.5]])) == pytest.approx(0.5)


def test_solve_lyapunov_scalar():
    gamma = solve_lyapunov([[-1.0]], [[1.0]])
    assert gamma[0, 0] == pytest.approx(0.5, abs=1e-15)


def test_solve_lyapunov_residual_and_symmetry():
    # When
    gamma = solve_lyapunov(DRIFT, SIGMA)

    # Then
    np.testing.assert_allclose(DRIFT @ gamma + gamma @ DRIFT.T + SIGMA, 0.0, atol=1e-12)
    np.testing.assert_array_equal(gamma, gamma.T)
    assert np.linalg.eigvalsh(gamma).min() > 0


def test_solve_lyapunov_rejects_unstable_and_asymmetric():
    with pytest.raises(UnstableError):
        solve_lyapunov([[1.0, 0.0], [0.0, -1.0]], np.eye(2))
    with pytest.raises(NotSymmetricError):
        solve_lyapunov(DRIFT, [[1.0, 0.2, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(BadShapeError):
        solve_lyapunov(DRIFT, np.eye(2))


def test_gramian_scalar_closed_form():
    # Q(h) = ∫_0^h e^{-2u} du
    h = 0.7
    Q = gramian([[-1.0]], [[1.0]], h)
    assert Q[0, 0] == pytest.approx((1 - math.exp(-2 * h)) / 2, rel=1e-13)


def test_gramian_edge_cases():
    np.testing.assert_array_equal(gramian(DRIFT, SIGMA, 0.0), np.zeros((3, 3)))
    with pytest.raises(NegativeHorizonError):
        gramian(DRIFT, SIGMA, -0.1)


def test_gramian_converges_to_lyapunov_solution():
    np.testing.assert_allclose(gramian(DRIFT, SIGMA, 40.0), solve_lyapunov(DRIFT, SIGMA), atol=1e-10)


@pytest.mark.parametrize("h", [1.0, 10.0, 20.0, 40.0, 500.0])
def test_gramian_long_horizons(h):
    # Given: Q(h) = Γ - e^{Ah} Γ e^{A^T h} for stable A
    gamma = solve_lyapunov(DRIFT, SIGMA)
    E = expm(DRIFT * h)

    # When
    Q = gramian(DRIFT, SIGMA, h)

    # Then
    np.testing.assert_allclose(Q, gamma - E @ gamma @ E.T, atol=1e-12)
    assert np.linalg.eigvalsh(Q).min() > 0


def test_gramian_doubling_identity():
    # Q(2t) = Q(t) + e^{At} Q(t) e^{A^T t}
    t = 3.0
    Q = gramian(DRIFT, SIGMA, t)
    E = expm(DRIFT * t)
    np.testing.assert_allclose(gramian(DRIFT, SIGMA, 2 * t), Q + E @ Q @ E.T, atol=1e-12)


def test_gramian_unstable_scalar_long_horizon():
    # ∫_0^h e^{u} du with A = 1/2, W = 1
    h = 10.0
    Q = gramian([[0.5]], [[1.0]], h)
    assert Q[0, 0] == pytest.approx(math.exp(h) - 1.0, rel=1e-12)


def test_gramian_small_horizon_series():
    # Q(h) ≈ hW + h^2 (AW + WA^T)/2
    h = 1e-3
    Q = gramian(DRIFT, SIGMA, h)
    series = h * SIGMA + h ** 2 * (DRIFT @ SIGMA + SIGMA @ DRIFT.T) / 2
    np.testing.assert_allclose(Q, series, atol=1e-8)


def test_gramian_matches_quadrature(simpson):
    Q = gramian(DRIFT, SIGMA, 1.5)
    np.testing.assert_allclose(Q, simpson(DRIFT, SIGMA, 1.5, panels=2000), atol=1e-10)


def test_power_stack():
    powers = power_stack(DRIFT, 3)
    assert len(powers) == 4
    np.testing.assert_array_equal(powers[0], np.eye(3))
    np.testing.assert_allclose(powers[3], np.linalg.matrix_power(DRIFT, 3))
    # row 2 of A^2
    np.testing.assert_array_equal(powers[2][1], [1.0, 5.0, -4.0])


def test_psd_factor_reconstructs_and_clips():
    # Given
    L = psd_factor(SIGMA)

    # Then
    np.testing.assert_allclose(L @ L.T, SIGMA, atol=1e-14)

    singular = np.array([[1.0, 1.0], [1.0, 1.0 - 1e-15]])
    L = psd_factor(singular)
    np.testing.assert_allclose(L @ L.T, singular, atol=1e-12)


def test_psd_factor_rejects_indefinite():
    with pytest.raises(CholeskyFailureError):
        psd_factor(np.diag([1.0, -0.5]))


def test_check_symmetric_tolerance():
    check_symmetric(SIGMA + 1e-14 * np.eye(3))
    with pytest.raises(NotSymmetricError):
        check_symmetric(np.array([[1.0, 1e-6], [0.0, 1.0]]))
