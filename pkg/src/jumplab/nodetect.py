"""Unraveling without photon detection: piecewise-deterministic projector
flow, jump-rate spectrum, trajectory sampling and path densities.

Between jumps a pure state follows the cubic flow
    dP/dt = P⊥ L[P] P + P L[P] P⊥,
its survival log-derivative is Tr(P L[P]) <= 0, and at a jump the state
lands on an eigenprojector of P⊥ L[P] P⊥ with probability proportional to
the eigenvalue (the channel rate).
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .linalg import ValidationError, require_hermitian
from .lindblad import generator_apply, validate_density
from .model import AtomModel, transition_arrays
from .sampling import Trajectory, as_state_vector, sample_one, step_size

SEGMENT_MATCH_TOL = 1e-5     # projector distance allowed in density recompute


def _check_projector(pi: np.ndarray) -> np.ndarray:
    pi = require_hermitian(pi)
    if np.linalg.norm(pi @ pi - pi) > 1e-9 or abs(pi.trace().real - 1.0) > 1e-10:
        raise ValidationError("expected a rank-1 orthogonal projector")
    return pi


def coupling_operator(m: AtomModel, pi: np.ndarray) -> np.ndarray:
    """The block-off-diagonal rotation generator -P⊥ L[P] P + P L[P] P⊥."""
    pi = _check_projector(pi)
    a = generator_apply(m, pi)
    ap = a @ pi
    pa = pi @ a
    pap = pi @ ap
    return -(ap - pap) + (pa - pap)


def nojump_rhs(m: AtomModel, pi: np.ndarray) -> np.ndarray:
    """Tangent flow of the projector between jumps: P⊥ L[P] P + P L[P] P⊥."""
    pi = _check_projector(pi)
    a = generator_apply(m, pi)
    pap = pi @ a @ pi
    return a @ pi + pi @ a - 2.0 * pap


def survival_log_rhs(m: AtomModel, pi: np.ndarray) -> float:
    """d ln(survival)/dt = Tr(P L[P]); the negated total jump rate."""
    pi = _check_projector(pi)
    a = generator_apply(m, pi)
    val = float(np.trace(pi @ a).real)
    return min(val, 0.0)


def jump_spectrum(m: AtomModel, pi: np.ndarray) -> list[tuple[float, np.ndarray]]:
    """Channels (rate, target projector) in descending rate order.

    Rates sum to the total jump rate; targets are mutually orthogonal and
    orthogonal to the current state.
    """
    pi = _check_projector(pi)
    psi = as_state_vector(pi)
    ti, tj, tw = transition_arrays(m)
    rates, targets = _kernels._nd_spectrum(ti, tj, tw, psi)
    return [(float(rates[k]), np.outer(targets[k], targets[k].conj())) for k in range(len(rates))]


def sample_trajectory(
    m: AtomModel,
    initial: np.ndarray,
    t_bar: float,
    stream: np.random.Generator,
    grid=None,
) -> Trajectory:
    """Sample one trajectory of the no-detection process on [0, t_bar]."""
    return sample_one(m, initial, t_bar, stream, grid=grid, mode="nodetect")


def _integrate_segment(m, psi_start, t_start, t_end, check_times, check_states, check_end):
    """RK4 the no-jump flow over a segment, returning (psi_end, hazard).

    Along the way the state is compared against recorded samples strictly
    inside the segment (and at its end when `check_end`, i.e. at the
    horizon); a mismatch raises ValidationError.  Samples falling exactly on
    a jump time are skipped: they may carry either side of the jump.
    """
    e = np.array(m.energies, dtype=np.float64)
    ti, tj, tw = transition_arrays(m)
    h = step_size(m)
    n = m.n_levels
    bufs = [np.zeros(n, dtype=np.complex128) for _ in range(6)]
    out, k1, k2, k3, k4, tmp = bufs
    psi = psi_start.copy()
    hazard = 0.0
    hi = t_end + 1e-12 if check_end else t_end - 1e-12
    marks = [t for t in check_times if t_start + 1e-12 < t < hi]
    points = sorted(set(marks + [t_end]))
    t = t_start
    for tp in points:
        seg = tp - t
        if seg > 0:
            nsub = max(1, int(np.ceil(seg / h)))
            hh = seg / nsub
            for _ in range(nsub):
                hazard += _kernels._nd_rk4(e, ti, tj, tw, psi, hh, out, k1, k2, k3, k4, tmp)
                psi = out / np.linalg.norm(out)
        t = tp
        for tc, sc in zip(check_times, check_states):
            if abs(tc - tp) <= 1e-12 and tp in marks:
                dist = np.linalg.norm(np.outer(psi, psi.conj()) - np.outer(sc, sc.conj()))
                if dist > SEGMENT_MATCH_TOL:
                    raise ValidationError(
                        f"trajectory sample at t={tc:g} departs from the no-jump flow by {dist:.2e}"
                    )
    return psi, hazard


def trajectory_log_density(m: AtomModel, traj: Trajectory) -> float:
    """Recompute the log path density of a no-detection trajectory.

    The density multiplies each segment's survival probability with the
    channel rate at every jump time; it is a density in the jump times, not
    a probability.
    """
    if traj.mode != "nodetect":
        raise ValidationError(f"expected a nodetect trajectory, got {traj.mode!r}")
    psi = as_state_vector(traj.initial)
    check_t = list(traj.times)
    check_s = list(traj.states)
    log_dens = 0.0
    t_prev = 0.0
    for ev in traj.events:
        psi, hazard = _integrate_segment(m, psi, t_prev, ev.time, check_t, check_s, False)
        log_dens -= hazard
        rates, targets = _kernels._nd_spectrum(*transition_arrays(m), psi)
        overlaps = np.abs(targets.conj() @ ev.post_state) ** 2
        pick = int(np.argmax(overlaps))
        if overlaps[pick] < 0.99:
            raise ValidationError(
                f"post-jump state at t={ev.time:g} is not a jump channel of the pre-jump state"
            )
        log_dens += np.log(rates[pick])
        psi = ev.post_state.copy()
        t_prev = ev.time
    _, hazard = _integrate_segment(m, psi, t_prev, traj.horizon, check_t, check_s, True)
    log_dens -= hazard
    return float(log_dens)


def ensemble_mean(trajs: list[Trajectory], grid) -> np.ndarray:
    """Pointwise average of the sampled projectors: one density per grid time."""
    g = np.asarray(grid, dtype=np.float64)
    if not trajs:
        raise ValidationError("no trajectories to average")
    for traj in trajs:
        if traj.times.shape != g.shape or not np.allclose(traj.times, g):
            raise ValidationError("trajectory grids do not match")
    n = trajs[0].states.shape[1]
    acc = np.zeros((g.size, n, n), dtype=np.complex128)
    for traj in trajs:
        acc += np.einsum("ta,tb->tab", traj.states, traj.states.conj())
    acc /= len(trajs)
    for k in range(g.size):
        validate_density(acc[k])
    return acc
