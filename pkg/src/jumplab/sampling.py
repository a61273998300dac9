"""Trajectory containers and the seeded, worker-count-independent ensemble
runner shared by both unravelings."""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .linalg import NumericalError, ValidationError, fix_phase, project_rank1
from .model import AtomModel, transition_arrays
from .rng import trajectory_stream

DEFAULT_STEP = 0.01


@dataclass(frozen=True)
class JumpEvent:
    time: float
    channel: int
    post_state: np.ndarray      # unit state vector; projector is outer(v, v*)
    rate_at_jump: float


@dataclass
class Trajectory:
    initial: np.ndarray          # unit state vector at t = 0
    events: list[JumpEvent]
    horizon: float
    times: np.ndarray            # sample grid
    states: np.ndarray           # (len(times), N) unit state vectors
    log_density: float
    mode: str = "nodetect"

    def projector(self, k: int) -> np.ndarray:
        v = self.states[k]
        return np.outer(v, v.conj())


def as_state_vector(initial: np.ndarray) -> np.ndarray:
    """Accept a state vector or a rank-1 projector; return a unit vector."""
    arr = np.asarray(initial, dtype=np.complex128)
    if arr.ndim == 1:
        nrm = np.linalg.norm(arr)
        if nrm == 0:
            raise ValidationError("initial state vector is zero")
        return fix_phase(arr / nrm)
    if arr.ndim == 2:
        pi = project_rank1(arr)
        n = arr.shape[0]
        # dominant eigenvector of the retracted projector
        k = int(np.argmax(np.abs(np.diag(pi))))
        v = pi[:, k] / np.sqrt(pi[k, k].real)
        return fix_phase(v)
    raise ValidationError(f"initial state has unsupported shape {arr.shape}")


def step_size(m: AtomModel) -> float:
    """Integrator step: h = min(0.01, 0.05/alpha, 0.05/max energy gap)."""
    h = DEFAULT_STEP
    if m.alpha > 0:
        h = min(h, 0.05 / m.alpha)
    gap = m.max_gap()
    if gap > 0:
        h = min(h, 0.05 / gap)
    return h


def _check_grid(grid, t_bar: float) -> np.ndarray:
    if grid is None:
        return np.zeros(0, dtype=np.float64)
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 1 or (g.size and (np.any(np.diff(g) <= 0) or g[0] < 0 or g[-1] > t_bar + 1e-12)):
        raise ValidationError("sample grid must be strictly increasing within [0, horizon]")
    return g


def _kernel_args(m: AtomModel, mode: str):
    e = np.array(m.energies, dtype=np.float64)
    ti, tj, tw = transition_arrays(m)
    if mode == "nodetect":
        return (e, ti, tj, tw)
    w_level = np.zeros(m.n_levels, dtype=np.float64)
    for j, w in zip(tj, tw):
        w_level[j] += w
    return (e, w_level, ti, tj, tw)


def _draw_budget(m: AtomModel, t_bar: float) -> int:
    _, _, tw = transition_arrays(m)
    lam_max = float(np.sum(tw))
    mean = lam_max * t_bar
    return int(2 * (mean + 10.0 * np.sqrt(mean + 1.0)) + 32)


def _sample_raw(m, psi0, t_bar, stream, grid, mode, args, h):
    """Run the sampling kernel, refilling the draw buffer as needed.

    Re-running the kernel on a longer prefix of the same stream reproduces
    the consumed draws exactly, so refills never change the outcome.
    """
    uniforms = stream.random(_draw_budget(m, t_bar))
    while True:
        if mode == "nodetect":
            res = _kernels.nodetect_trajectory(*args, psi0, t_bar, grid, h, uniforms)
        else:
            res = _kernels.detect_trajectory(*args, psi0, t_bar, grid, uniforms)
        if res[0] == _kernels.STATUS_OK:
            return res
        uniforms = np.concatenate([uniforms, stream.random(uniforms.size)])


def sample_one(
    m: AtomModel,
    initial: np.ndarray,
    t_bar: float,
    stream: np.random.Generator,
    grid=None,
    mode: str = "nodetect",
) -> Trajectory:
    """Sample a single trajectory and wrap it in a Trajectory record."""
    if t_bar <= 0:
        raise ValidationError(f"horizon must be > 0, got {t_bar}")
    if mode not in ("nodetect", "detect"):
        raise ValidationError(f"unknown mode {mode!r}")
    psi0 = as_state_vector(initial)
    g = _check_grid(grid, t_bar)
    res = _sample_raw(m, psi0, t_bar, stream, g, mode, _kernel_args(m, mode), step_size(m))
    _, n_ev, ev_t, ev_ch, ev_state, ev_rate, grid_states, log_dens, _ = res
    events = [
        JumpEvent(
            time=float(ev_t[k]),
            channel=int(ev_ch[k]),
            post_state=fix_phase(ev_state[k].copy()),
            rate_at_jump=float(ev_rate[k]),
        )
        for k in range(n_ev)
    ]
    states = np.array([fix_phase(grid_states[k]) for k in range(g.size)]).reshape(g.size, m.n_levels)
    return Trajectory(
        initial=psi0,
        events=events,
        horizon=float(t_bar),
        times=g,
        states=states,
        log_density=float(log_dens),
        mode=mode,
    )


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("JUMPLAB_THREADS")
    n = requested if requested else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean_states: np.ndarray              # (len(times), N, N) density matrices
    jump_histogram: dict[int, int]
    n_trajectories: int
    trajectories: list[Trajectory] | None = None
    wall_time: float = field(default=0.0)


def run_ensemble(
    m: AtomModel,
    initial: np.ndarray,
    t_bar: float,
    grid,
    n_traj: int,
    seed: int,
    mode: str = "nodetect",
    workers: int | None = None,
    keep_trajectories: bool = False,
    chunk: int = 256,
) -> EnsembleResult:
    """Sample n_traj trajectories and average their projectors on the grid.

    Trajectories are partitioned into fixed index chunks; chunk sums are
    accumulated in index order, so the result is bit-identical for any
    worker count.
    """
    t0 = time.perf_counter()
    if mode not in ("nodetect", "detect"):
        raise ValidationError(f"unknown mode {mode!r}")
    psi0 = as_state_vector(initial)
    g = _check_grid(grid, t_bar)
    n = m.n_levels
    args = _kernel_args(m, mode)
    h = step_size(m)
    chunks = [(lo, min(lo + chunk, n_traj)) for lo in range(0, n_traj, chunk)]

    def run_chunk(bounds):
        lo, hi = bounds
        hist: dict[int, int] = {}
        kept = [] if keep_trajectories else None
        stack = np.empty((hi - lo, g.size, n), dtype=np.complex128)
        for k in range(lo, hi):
            try:
                if keep_trajectories:
                    traj = sample_one(m, psi0, t_bar, trajectory_stream(seed, k), grid=g, mode=mode)
                    kept.append(traj)
                    stack[k - lo] = traj.states
                    nj = len(traj.events)
                else:
                    res = _sample_raw(m, psi0, t_bar, trajectory_stream(seed, k), g, mode, args, h)
                    stack[k - lo] = res[6]
                    nj = int(res[1])
            except NumericalError as exc:
                raise NumericalError(f"trajectory {k}: {exc}") from exc
            hist[nj] = hist.get(nj, 0) + 1
        acc = np.einsum("kta,ktb->tab", stack, stack.conj())
        return acc, hist, kept

    nwork = worker_count(workers)
    if nwork == 1 or len(chunks) == 1:
        results = [run_chunk(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=nwork) as pool:
            results = list(pool.map(run_chunk, chunks))

    total = np.zeros((g.size, n, n), dtype=np.complex128)
    hist: dict[int, int] = {}
    trajs: list[Trajectory] | None = [] if keep_trajectories else None
    for acc, chunk_hist, kept in results:
        total += acc
        for k, v in chunk_hist.items():
            hist[k] = hist.get(k, 0) + v
        if trajs is not None:
            trajs.extend(kept)
    mean = total / max(n_traj, 1)
    return EnsembleResult(
        times=g,
        mean_states=mean,
        jump_histogram=dict(sorted(hist.items())),
        n_trajectories=n_traj,
        trajectories=trajs,
        wall_time=time.perf_counter() - t0,
    )
