"""Counter-based random streams: trajectory k draws from a Philox generator
keyed by (seed, k), so adding or removing workers never changes any
trajectory's randomness."""

from __future__ import annotations

import numpy as np


def trajectory_stream(seed: int, index: int) -> np.random.Generator:
    key = np.array([np.uint64(seed), np.uint64(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
