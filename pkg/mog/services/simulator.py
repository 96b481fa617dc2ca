"""
Sample paths of MCAR processes.

- exact Gaussian transitions X(t+h) = e^{Ah} X(t) + η, η ~ N(0, Q(h))
- Euler-Maruyama with Brownian, compound Poisson or summed Lévy drivers
- independent replications in a thread pool
- CSV export with full double precision
"""
import math
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from mog.models.errors import (
    BadDriverError,
    MogError,
    NegativeHorizonError,
    NonGaussianDriverError,
    ShapeMismatchError,
)
from mog.models.mcar_entities import (
    BrownianDriver,
    CompoundPoissonDriver,
    LevyDriver,
    SamplePath,
    StateSpace,
    SumDriver,
)
from mog.services.matrix_kernels import check_symmetric, psd_factor, stability_margin
from mog.services.mcar_model import sampled_var1
from mog.utils.logger import get_logger

logger = get_logger(__name__)

DRIVER_MATCH_TOL = 1e-9
BURN_IN_HORIZON = 20.0  # multiples of the slowest decay time
_CHUNK = 8192  # sub-steps of noise drawn per batch


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; the same seed always gives the same stream."""
    return np.random.Generator(np.random.PCG64(seed))


def _check_grid(h: float, n_steps: int) -> None:
    if h <= 0:
        raise NegativeHorizonError(f"step size must be positive, got {h}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be at least 1, got {n_steps}")


def _initial_state(ss: StateSpace, x0) -> np.ndarray:
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.shape != (ss.dim,):
        raise ShapeMismatchError(f"x0 must have {ss.dim} entries, got {x.size}")
    return x


def _driver_warnings(ss: StateSpace, driver: LevyDriver) -> List[str]:
    mismatch = float(np.max(np.abs(driver.levy_covariance() - ss.sigma_L)))
    if mismatch > DRIVER_MATCH_TOL:
        message = f"driver covariance differs from the model's sigma_L by {mismatch:.3e}"
        logger.warning(message)
        return [message]
    return []


def _leaf_drivers(driver: LevyDriver) -> List[Union[BrownianDriver, CompoundPoissonDriver]]:
    if isinstance(driver, SumDriver):
        leaves = []
        for component in driver.components:
            leaves.extend(_leaf_drivers(component))
        return leaves
    return [driver]


def _driver_factor(matrix, k: int, name: str) -> np.ndarray:
    arr = np.asarray(matrix, dtype=float)
    if arr.shape != (k, k):
        raise BadDriverError(f"{name} must be {k}x{k}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise BadDriverError(f"{name} contains NaN or Inf entries")
    try:
        check_symmetric(arr, name)
        return psd_factor(arr, name)
    except (MogError, np.linalg.LinAlgError) as e:
        raise BadDriverError(f"{name} is not a covariance matrix: {e}") from e


class _IncrementSampler:
    """Draws Lévy increments over sub-intervals of length delta."""

    def __init__(self, driver: LevyDriver, k: int, delta: float, rng: np.random.Generator):
        self.k = k
        self.delta = delta
        self.rng = rng
        self.parts = []
        for leaf in _leaf_drivers(driver):
            if isinstance(leaf, BrownianDriver):
                self.parts.append(("brownian", 0.0, _driver_factor(leaf.cov, k, "brownian cov")))
            else:
                self.parts.append(("cpoisson", leaf.rate, _driver_factor(leaf.jump_cov, k, "jump_cov")))

    def draw(self, count: int) -> np.ndarray:
        increments = np.zeros((count, self.k))
        for kind, rate, factor in self.parts:
            z = self.rng.standard_normal((count, self.k))
            if kind == "brownian":
                increments += math.sqrt(self.delta) * z @ factor.T
            else:
                # sum of N i.i.d. N(0, J) jumps is N(0, N J)
                jumps = self.rng.poisson(rate * self.delta, size=count)
                increments += np.sqrt(jumps)[:, None] * (z @ factor.T)
        return increments


def simulate_exact_gaussian(
    ss: StateSpace,
    h: float,
    n_steps: int,
    seed: int,
    driver: Optional[LevyDriver] = None,
    x0=None,
) -> SamplePath:
    """
    Exact simulation of a Brownian-driven MCAR process on the grid 0, h, ..., n_steps h.

    Args:
        ss: state space
        h: grid spacing, h > 0
        n_steps: number of transitions, >= 1
        seed: PCG64 seed
        driver: optional Brownian driver (only its covariance is checked against ss)
        x0: optional initial state; default draws X(0) ~ N(0, Γ(0))

    Returns:
        SamplePath with states and observations Y = C X
    """
    if driver is not None and not isinstance(driver, BrownianDriver):
        raise NonGaussianDriverError(f"exact Gaussian simulation needs a Brownian driver, got {driver.kind}")
    _check_grid(h, n_steps)
    warnings = _driver_warnings(ss, driver) if driver is not None else []

    transition, Q = sampled_var1(ss, h)
    noise_factor = psd_factor(Q, "Q(h)")
    rng = make_rng(seed)
    n = ss.dim

    states = np.empty((n_steps + 1, n))
    if x0 is None:
        states[0] = psd_factor(ss.gamma0, "Gamma(0)") @ rng.standard_normal(n)
    else:
        states[0] = _initial_state(ss, x0)

    noise = rng.standard_normal((n_steps, n)) @ noise_factor.T
    for t in range(n_steps):
        states[t + 1] = transition @ states[t] + noise[t]

    logger.debug(f"Exact simulation: {n_steps} steps, h={h:g}, seed={seed}")
    return SamplePath(
        h=h,
        n_steps=n_steps,
        states=states,
        observations=states @ ss.C.T,
        seed=seed,
        driver="brownian",
        warnings=warnings,
    )


def simulate_euler_levy(
    ss: StateSpace,
    driver: LevyDriver,
    h: float,
    n_steps: int,
    substeps: int = 1,
    seed: int = 0,
    x0=None,
) -> SamplePath:
    """
    Euler-Maruyama for dX = A X dt + B dL at internal step δ = h / substeps.

    Without x0 the chain starts at 0 and runs ⌈20 / |margin| / δ⌉ burn-in
    sub-steps before the first recorded point. With x0 the first recorded
    point is x0 itself.

    Raises:
        BadDriverError: driver covariances of the wrong shape or not PSD
    """
    _check_grid(h, n_steps)
    if substeps < 1:
        raise ValueError(f"substeps must be at least 1, got {substeps}")

    delta = h / substeps
    rng = make_rng(seed)
    sampler = _IncrementSampler(driver, ss.k, delta, rng)
    warnings = _driver_warnings(ss, driver)
    A = np.array(ss.A)
    offset = (ss.p - 1) * ss.k  # B injects into the last block

    if x0 is None:
        margin = stability_margin(A)
        burn_in = math.ceil(BURN_IN_HORIZON / abs(margin) / delta)
        x = np.zeros(ss.dim)
    else:
        burn_in = 0
        x = _initial_state(ss, x0).copy()

    states = np.empty((n_steps + 1, ss.dim))
    total = burn_in + n_steps * substeps
    if burn_in == 0:
        states[0] = x
    recorded = 1 if burn_in == 0 else 0
    step = 0
    while step < total:
        count = min(_CHUNK, total - step)
        increments = sampler.draw(count)
        for dl in increments:
            x = x + delta * (A @ x)
            x[offset:] += dl
            step += 1
            if step >= burn_in and (step - burn_in) % substeps == 0:
                states[recorded] = x
                recorded += 1

    logger.debug(
        f"Euler simulation: {n_steps} steps, substeps={substeps}, burn-in={burn_in}, driver={driver.kind}, seed={seed}"
    )
    return SamplePath(
        h=h,
        n_steps=n_steps,
        states=states,
        observations=states @ ss.C.T,
        seed=seed,
        driver=driver.kind,
        warnings=warnings,
    )


def _simulate_one(ss, h, n_steps, seed, driver, substeps) -> SamplePath:
    if driver is None or isinstance(driver, BrownianDriver):
        return simulate_exact_gaussian(ss, h, n_steps, seed, driver=driver)
    return simulate_euler_levy(ss, driver, h, n_steps, substeps=substeps, seed=seed)


def simulate_replications(
    ss: StateSpace,
    h: float,
    n_steps: int,
    base_seed: int,
    replications: int,
    driver: Optional[LevyDriver] = None,
    substeps: int = 1,
    max_workers: Optional[int] = None,
) -> List[SamplePath]:
    """
    Independent replications with seed = base_seed + i, returned in index order.

    Brownian (or no) driver uses the exact simulator, any other driver the
    Euler scheme.
    """
    if replications < 1:
        raise ValueError(f"replications must be at least 1, got {replications}")
    if max_workers is None:
        max_workers = min(replications, os.cpu_count() or 1)

    logger.info(f"Running {replications} replication(s) on {max_workers} worker thread(s)")
    paths: List[Optional[SamplePath]] = [None] * replications
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        futures = {
            executor.submit(_simulate_one, ss, h, n_steps, base_seed + i, driver, substeps): i
            for i in range(replications)
        }
        for future in as_completed(futures):
            paths[futures[future]] = future.result()
    return paths


def path_frame(path: SamplePath) -> pd.DataFrame:
    """Columns t, X1..Xkp, Y1..Yk."""
    n_states = path.states.shape[1]
    n_obs = path.observations.shape[1]
    frame = pd.DataFrame(path.states, columns=[f"X{i}" for i in range(1, n_states + 1)])
    frame.insert(0, "t", path.times)
    for i in range(n_obs):
        frame[f"Y{i + 1}"] = path.observations[:, i]
    return frame


def write_path_csv(path: SamplePath, file: Union[str, Path]) -> Path:
    file = Path(file)
    file.parent.mkdir(parents=True, exist_ok=True)
    path_frame(path).to_csv(file, index=False, float_format="%.17g")
    logger.info(f"Wrote {path.n_steps + 1} rows to {file}")
    return file


def read_path_csv(file: Union[str, Path], seed: int = 0) -> SamplePath:
    """Read a path written by write_path_csv; h is taken from the first two time stamps."""
    frame = pd.read_csv(file, float_precision="round_trip")
    x_cols = [c for c in frame.columns if c.startswith("X")]
    y_cols = [c for c in frame.columns if c.startswith("Y")]
    if "t" not in frame.columns or not x_cols or not y_cols or len(frame) < 2:
        raise ShapeMismatchError(f"{file} is not a sample path file")
    times = frame["t"].to_numpy()
    return SamplePath(
        h=float(times[1] - times[0]),
        n_steps=len(frame) - 1,
        states=frame[x_cols].to_numpy(),
        observations=frame[y_cols].to_numpy(),
        seed=seed,
    )
