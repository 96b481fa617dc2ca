import numpy as np
import pytest

from mog.models.errors import (
    DegenerateVarianceError,
    InsufficientSamplesError,
    NotStrictError,
    QueryInvalidError,
    RankDeficientError,
    ShapeMismatchError,
)
from mog.models.mcar_entities import BrownianDriver, MCARSpec, SamplePath
from mog.services.empirical import (
    assumption_density_check,
    assumption_reports,
    estimate_var1,
    frequency_grid,
    innovation_correlation,
    spectral_mass_check,
)
from mog.services.matrix_kernels import expm, gramian
from mog.services.mcar_model import build_state_space, spectral_density_grid
from mog.services.simulator import simulate_euler_levy, simulate_exact_gaussian


def test_innovation_correlation_reference_model(reference_ss):
    # Given
    path = simulate_exact_gaussian(reference_ss, 0.01, 100_000, seed=2)

    # When
    corr = innovation_correlation(path, reference_ss)

    # Then: residual covariance ≈ h sigma_L
    np.testing.assert_array_equal(np.diag(corr), np.ones(3))
    assert corr[0, 2] == pytest.approx(0.5, abs=0.02)
    assert corr[0, 1] == pytest.approx(0.0, abs=0.02)
    assert corr[1, 2] == pytest.approx(0.0, abs=0.02)


def test_innovation_correlation_of_deterministic_path(scalar_ou):
    # Given: Y(t) = e^{-t}, predicted exactly
    h = 0.1
    states = np.exp(-h * np.arange(50))[:, None]
    path = SamplePath(h=h, n_steps=49, states=states, observations=states.copy(), seed=0)

    # Then
    with pytest.raises(DegenerateVarianceError):
        innovation_correlation(path, scalar_ou)


def test_innovation_correlation_shape_mismatch(reference_ss, scalar_ou):
    path = simulate_exact_gaussian(scalar_ou, 0.1, 20, seed=0)
    with pytest.raises(ShapeMismatchError):
        innovation_correlation(path, reference_ss)


def test_estimate_var1_recovers_sampled_model(reference_ss):
    # Given
    h = 0.1
    path = simulate_exact_gaussian(reference_ss, h, 100_000, seed=4)

    # When
    estimate = estimate_var1(path)

    # Then
    np.testing.assert_allclose(estimate.transition, expm(np.array(reference_ss.A) * h), atol=0.02)
    np.testing.assert_allclose(estimate.noise_cov, gramian(reference_ss.A, reference_ss.sigma_L, h), atol=0.005)


def test_estimate_var1_noiseless_path_is_exact(reference_ss):
    # Given
    silent = BrownianDriver(cov=np.zeros((3, 3)).tolist())
    path = simulate_euler_levy(reference_ss, silent, 0.1, 90, seed=0, x0=[1.0, -0.5, 0.3])

    # When
    estimate = estimate_var1(path)

    # Then
    np.testing.assert_allclose(estimate.transition, np.eye(3) + 0.1 * np.array(reference_ss.A), atol=1e-8)
    np.testing.assert_allclose(estimate.noise_cov, 0.0, atol=1e-8)


def test_estimate_var1_errors(reference_ss, rng):
    short = simulate_exact_gaussian(reference_ss, 0.1, 50, seed=0)
    with pytest.raises(InsufficientSamplesError):
        estimate_var1(short)

    states = rng.standard_normal((201, 3))
    states[:, 1] = 0.0
    flat = SamplePath(h=0.1, n_steps=200, states=states, observations=states.copy(), seed=0)
    with pytest.raises(RankDeficientError):
        estimate_var1(flat)


def test_frequency_grid():
    grid = frequency_grid(1.0, 0.25)
    np.testing.assert_allclose(grid, [-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ValueError):
        frequency_grid(0.0, 0.1)


def test_assumption_check_reference_model(reference_ss):
    # When
    report = assumption_density_check(reference_ss, {1}, {2, 3})

    # Then: the limit is the squared correlation of component 1 with (2, 3) under sigma_L
    assert report.limit_eig == pytest.approx(0.25, abs=1e-12)
    assert 0.0 <= report.sup_eig < 1.0
    assert report.satisfied
    assert report.A == [1] and report.B == [2, 3]


def test_assumption_check_diagonal_model():
    ss = build_state_space(MCARSpec.from_arrays([np.diag([1.0, 2.0, 3.0])], np.diag([1.0, 0.5, 2.0])))
    for report in assumption_reports(ss):
        assert report.sup_eig == pytest.approx(0.0, abs=1e-12)
        assert report.limit_eig == pytest.approx(0.0, abs=1e-12)
        assert report.satisfied


def test_assumption_check_two_components_is_squared_coherence():
    # Given
    ss = build_state_space(MCARSpec.from_arrays([[[1.0, 0.0], [-0.5, 1.0]]], np.eye(2)))
    lambda_max, step = 20.0, 0.05

    # When
    report = assumption_density_check(ss, {1}, {2}, lambda_max=lambda_max, step=step)

    # Then
    f = spectral_density_grid(ss, frequency_grid(lambda_max, step))
    coherence = np.abs(f[:, 0, 1]) ** 2 / np.real(f[:, 0, 0] * f[:, 1, 1])
    assert report.sup_eig == pytest.approx(coherence.max(), rel=1e-8)
    assert report.sup_lambda == pytest.approx(frequency_grid(lambda_max, step)[np.argmax(coherence)])


def test_assumption_check_errors(reference_ss):
    singular = build_state_space(MCARSpec.from_arrays([np.eye(2)], [[1.0, 1.0], [1.0, 1.0]], strict=False))
    with pytest.raises(NotStrictError):
        assumption_reports(singular)
    with pytest.raises(QueryInvalidError):
        assumption_density_check(reference_ss, {1, 2}, {2})
    with pytest.raises(QueryInvalidError):
        assumption_density_check(reference_ss, set(), {2})


def test_all_splits(reference_ss):
    # When
    reports = assumption_reports(reference_ss, splits="all", lambda_max=10.0, step=0.1)

    # Then
    assert len(reports) == 12
    assert len({(tuple(r.A), tuple(r.B)) for r in reports}) == 12


def test_report_text(reference_ss):
    text = assumption_density_check(reference_ss, {1}, {2, 3}, lambda_max=10.0, step=0.1).to_text()
    lines = text.splitlines()
    assert lines[0] == "pair: A=1 B=2,3"
    assert lines[1] == "grid: [-10, 10] step 0.1"
    assert lines[-1] == "satisfied: true"


def test_spectral_mass(scalar_ou, reference_ss):
    assert spectral_mass_check(scalar_ou, lambda_max=1000.0) <= 1e-3
    assert spectral_mass_check(reference_ss, lambda_max=200.0) <= 1e-2

    defects = [spectral_mass_check(scalar_ou, lambda_max=m) for m in (25.0, 50.0, 100.0, 200.0)]
    assert defects == sorted(defects, reverse=True)
