"""Benchmark the jitted kernels against the pure-numpy fallback.

Runs the same workload twice in subprocesses, once per backend (the backend
is chosen at import time via JUMPLAB_DISABLE_NUMBA), and prints a small
table.  Usage:  python benchmarks/bench_backends.py [n_trajectories]
"""

import json
import os
import subprocess
import sys
import textwrap

WORKLOAD = textwrap.dedent(
    """
    import json
    import time
    import numpy as np
    import jumplab as jl

    n_traj = int(%d)
    m = jl.two_level_model(0.5)
    psi0 = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)
    grid = np.round(np.arange(21) * 0.25, 12)

    # warm the kernels (JIT compile or no-op) before timing
    jl.run_ensemble(m, psi0, 5.0, grid, 4, seed=0, mode="nodetect", workers=1)
    jl.run_ensemble(m, psi0, 5.0, grid, 4, seed=0, mode="detect", workers=1)

    out = {"numba": jl.NUMBA_ENABLED}
    for mode in ("nodetect", "detect"):
        t0 = time.perf_counter()
        res = jl.run_ensemble(m, psi0, 5.0, grid, n_traj, seed=1, mode=mode, workers=1)
        out[mode] = time.perf_counter() - t0
        out[mode + "_jumps"] = sum(k * v for k, v in res.jump_histogram.items())
    print(json.dumps(out))
    """
)


def run(disable_numba: bool, n_traj: int) -> dict:
    env = dict(os.environ)
    env["JUMPLAB_DISABLE_NUMBA"] = "1" if disable_numba else "0"
    res = subprocess.run(
        [sys.executable, "-c", WORKLOAD % n_traj],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    return json.loads(res.stdout.strip().splitlines()[-1])


def main() -> None:
    n_traj = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
    fast = run(False, n_traj)
    slow = run(True, n_traj)
    print(f"workload: {n_traj} trajectories, two-level, horizon 5.0, 21 grid points, 1 worker")
    print(f"{'mode':<10} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}")
    for mode in ("nodetect", "detect"):
        ratio = slow[mode] / fast[mode] if fast[mode] > 0 else float("inf")
        print(f"{mode:<10} {fast[mode]:>10.3f} {slow[mode]:>10.3f} {ratio:>7.1f}x")
    assert fast["numba"] and not slow["numba"]
    for mode in ("nodetect", "detect"):
        assert fast[mode + "_jumps"] == slow[mode + "_jumps"], "backends disagree on jump counts"


if __name__ == "__main__":
    main()
