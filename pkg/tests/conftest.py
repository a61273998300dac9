import time

import numpy as np
import pytest

import jumplab as jl
from jumplab.rng import trajectory_stream
from jumplab.sampling import sample_one


@pytest.fixture(scope="session")
def two_level():
    return jl.two_level_model(0.5)


@pytest.fixture(scope="session")
def ladder3():
    return jl.ladder_model(3, 0.5)


@pytest.fixture(scope="session")
def warm_kernels(two_level):
    """Compile both sampling kernels before any timed test runs."""
    sup = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)
    grid = np.array([0.0, 0.5])
    sample_one(two_level, sup, 0.5, trajectory_stream(0, 0), grid=grid, mode="nodetect")
    sample_one(two_level, sup, 0.5, trajectory_stream(0, 0), grid=grid, mode="detect")
    return True


@pytest.fixture(scope="session")
def big_runs(two_level, warm_kernels):
    """The M = 1e5 reconstruction runs shared by the acceptance suite and
    the cross-unraveling comparisons; returns {mode: (result, wall_seconds)}."""
    sup = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)
    grid = np.round(np.arange(21) * 0.25, 12)
    out = {}
    for mode in ("nodetect", "detect"):
        t0 = time.perf_counter()
        res = jl.run_ensemble(
            two_level, sup, 5.0, grid, 100_000, seed=20260810, mode=mode, workers=8
        )
        out[mode] = (res, time.perf_counter() - t0)
    return out
