import math

import numpy as np
import pytest

from mog.models.errors import BadDriverError, NegativeHorizonError, NonGaussianDriverError, ShapeMismatchError
from mog.models.mcar_entities import BrownianDriver, CompoundPoissonDriver, SumDriver
from mog.services.matrix_kernels import expm
from mog.services.mcar_model import autocovariance
from mog.services.simulator import (
    read_path_csv,
    simulate_euler_levy,
    simulate_exact_gaussian,
    simulate_replications,
    write_path_csv,
)


def lag_cov(x: np.ndarray, m: int) -> np.ndarray:
    x = x - x.mean(axis=0)
    n = len(x) - m
    return x[m:].T @ x[:n] / n


def test_exact_simulation_is_deterministic(reference_ss):
    first = simulate_exact_gaussian(reference_ss, 0.1, 500, seed=7)
    second = simulate_exact_gaussian(reference_ss, 0.1, 500, seed=7)
    other = simulate_exact_gaussian(reference_ss, 0.1, 500, seed=8)

    np.testing.assert_array_equal(first.states, second.states)
    assert not np.array_equal(first.states, other.states)
    assert first.states.shape == (501, 3)
    np.testing.assert_array_equal(first.observations, first.states[:, :3])


def test_exact_simulation_scalar_ou_autocorrelation(scalar_ou):
    # When
    path = simulate_exact_gaussian(scalar_ou, 0.1, 100_000, seed=1)

    # Then
    y = path.observations[:, 0]
    rho = np.corrcoef(y[1:], y[:-1])[0, 1]
    assert rho == pytest.approx(math.exp(-0.1), abs=0.01)
    assert y.var() == pytest.approx(0.5, abs=0.03)


def test_exact_simulation_matches_autocovariance(reference_ss):
    # Given
    h = 0.1
    path = simulate_exact_gaussian(reference_ss, h, 100_000, seed=3)

    for m in (0, 1, 5):
        # When
        empirical = lag_cov(path.states, m)

        # Then
        np.testing.assert_allclose(empirical, autocovariance(reference_ss, m * h), atol=0.03)


def test_exact_simulation_from_initial_state(reference_ss):
    x0 = [1.0, -2.0, 0.5]
    path = simulate_exact_gaussian(reference_ss, 0.1, 10, seed=0, x0=x0)
    np.testing.assert_array_equal(path.states[0], x0)
    with pytest.raises(ShapeMismatchError):
        simulate_exact_gaussian(reference_ss, 0.1, 10, seed=0, x0=[1.0])


def test_exact_simulation_rejects_bad_input(reference_ss):
    driver = CompoundPoissonDriver(rate=1.0, jump_cov=np.eye(3).tolist())
    with pytest.raises(NonGaussianDriverError):
        simulate_exact_gaussian(reference_ss, 0.1, 10, seed=0, driver=driver)
    with pytest.raises(NegativeHorizonError):
        simulate_exact_gaussian(reference_ss, 0.0, 10, seed=0)
    with pytest.raises(ValueError):
        simulate_exact_gaussian(reference_ss, 0.1, 0, seed=0)


def test_euler_without_noise_iterates_the_drift(reference_ss):
    # Given
    silent = BrownianDriver(cov=np.zeros((3, 3)).tolist())
    x0 = np.array([1.0, -0.5, 0.3])
    h, n_steps, substeps = 0.1, 20, 4

    # When
    path = simulate_euler_levy(reference_ss, silent, h, n_steps, substeps=substeps, seed=0, x0=x0)

    # Then
    step = np.eye(3) + (h / substeps) * np.array(reference_ss.A)
    expected = np.linalg.matrix_power(step, n_steps * substeps) @ x0
    np.testing.assert_allclose(path.states[-1], expected, rtol=1e-12)
    assert path.warnings


def test_euler_error_shrinks_with_substeps(reference_ss):
    # Given
    silent = BrownianDriver(cov=np.zeros((3, 3)).tolist())
    x0 = np.array([1.0, -0.5, 0.3])
    exact = expm(np.array(reference_ss.A) * 1.0) @ x0

    # When
    errors = [
        np.abs(simulate_euler_levy(reference_ss, silent, 0.1, 10, substeps=s, seed=0, x0=x0).states[-1] - exact).max()
        for s in (1, 2, 4, 8)
    ]

    # Then
    assert errors == sorted(errors, reverse=True)
    assert errors[-1] < errors[0] / 4


def test_euler_compound_poisson_variance(scalar_ou):
    # Given: rate * jump_cov = sigma_L = 1
    driver = CompoundPoissonDriver(rate=5.0, jump_cov=[[0.2]])

    # When
    path = simulate_euler_levy(scalar_ou, driver, 0.05, 100_000, substeps=5, seed=11)

    # Then
    assert path.driver == "cpoisson"
    assert path.warnings == []
    assert path.observations[:, 0].var() == pytest.approx(0.5, abs=0.05)


def test_euler_brownian_matches_stationary_covariance(reference_ss):
    driver = BrownianDriver(cov=np.array(reference_ss.sigma_L).tolist())
    path = simulate_euler_levy(reference_ss, driver, 0.05, 100_000, substeps=5, seed=5)
    np.testing.assert_allclose(np.diag(lag_cov(path.states, 0)), np.diag(reference_ss.gamma0), rtol=0.1)


def test_sum_driver_is_accepted(scalar_ou):
    driver = SumDriver(
        components=[BrownianDriver(cov=[[0.5]]), CompoundPoissonDriver(rate=2.0, jump_cov=[[0.25]])]
    )
    path = simulate_euler_levy(scalar_ou, driver, 0.1, 100, substeps=2, seed=0)
    assert path.driver == "sum"
    assert path.warnings == []


def test_driver_mismatch_warns(scalar_ou):
    path = simulate_euler_levy(scalar_ou, BrownianDriver(cov=[[2.0]]), 0.1, 10, seed=0)
    assert len(path.warnings) == 1
    assert "sigma_L" in path.warnings[0]


def test_bad_driver(scalar_ou):
    with pytest.raises(BadDriverError):
        simulate_euler_levy(scalar_ou, BrownianDriver(cov=[[1.0, 0.0], [0.0, 1.0]]), 0.1, 10)
    with pytest.raises(BadDriverError):
        simulate_euler_levy(scalar_ou, CompoundPoissonDriver(rate=1.0, jump_cov=[[-1.0]]), 0.1, 10)


def test_replications_use_consecutive_seeds(reference_ss):
    # When
    paths = simulate_replications(reference_ss, 0.1, 50, base_seed=100, replications=3, max_workers=2)

    # Then
    assert [p.seed for p in paths] == [100, 101, 102]
    for i, path in enumerate(paths):
        direct = simulate_exact_gaussian(reference_ss, 0.1, 50, seed=100 + i)
        np.testing.assert_array_equal(path.states, direct.states)
    with pytest.raises(ValueError):
        simulate_replications(reference_ss, 0.1, 50, base_seed=0, replications=0)


def test_csv_round_trip(tmp_path, reference_ss):
    # Given
    path = simulate_exact_gaussian(reference_ss, 0.25, 30, seed=9)

    # When
    file = write_path_csv(path, tmp_path / "paths" / "run.csv")
    loaded = read_path_csv(file, seed=9)

    # Then
    assert file.read_text(encoding="utf-8").splitlines()[0] == "t,X1,X2,X3,Y1,Y2,Y3"
    np.testing.assert_array_equal(loaded.states, path.states)
    np.testing.assert_array_equal(loaded.observations, path.observations)
    assert loaded.h == pytest.approx(0.25)
    assert loaded.n_steps == 30


def test_exact_gaussian_with_long_step(reference_ss):
    # Given: a step far beyond the decorrelation time
    path = simulate_exact_gaussian(reference_ss, 30.0, 4000, seed=5)

    # Then: consecutive samples are independent draws from N(0, Γ(0))
    assert np.all(np.isfinite(path.states))
    np.testing.assert_allclose(np.cov(path.states.T), reference_ss.gamma0, atol=0.03)
