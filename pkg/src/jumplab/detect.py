"""Unraveling with photon detection: the no-jump branch follows the
renormalized drift semigroup (which preserves rank 1 exactly), and a
detected emission collapses the state onto the destination energy
eigenstate."""

from __future__ import annotations

import numpy as np

from .linalg import NumericalError, ValidationError, project_rank1, matrix_exp
from .lindblad import build_superoperator, unvec, vec
from .model import AtomModel, transition_arrays
from .nodetect import _check_projector
from .sampling import Trajectory, as_state_vector, sample_one

SURVIVAL_UNDERFLOW = 1e-300
PURE_DRIFT_TOL = 1e-9      # ||P^2 - P|| allowed after renormalized drift


def effective_propagate(m: AtomModel, pi: np.ndarray, dt: float) -> tuple[np.ndarray, float]:
    """Propagate a pure state through exp(dt L') and renormalize.

    Returns (projector, survival) where survival is the trace left after the
    non-trace-preserving drift; it is the probability of seeing no photon in
    [0, dt).
    """
    pi = _check_projector(pi)
    if dt < 0:
        raise ValidationError(f"dt must be >= 0, got {dt}")
    if dt == 0.0:
        return pi, 1.0
    sup = build_superoperator(m, "prime")
    omega = unvec(matrix_exp(dt * sup) @ vec(pi))
    omega = 0.5 * (omega + omega.conj().T)
    survival = float(omega.trace().real)
    if survival <= SURVIVAL_UNDERFLOW:
        raise NumericalError(f"no-jump survival underflowed: {survival!r}")
    state = omega / survival
    if np.linalg.norm(state @ state - state) > PURE_DRIFT_TOL:
        raise NumericalError("drift semigroup output lost rank-1 purity")
    return project_rank1(state), survival


def channel_rates(m: AtomModel, pi: np.ndarray) -> list[tuple[int, float]]:
    """Emission rate into each destination level: rate_i = sum_j w_ij P_jj.

    Levels are listed in ascending order; only levels reachable by some
    allowed transition appear.  The rates sum to the total photon-emission
    hazard -d ln(survival)/dt at dt = 0.
    """
    pi = _check_projector(pi)
    ti, tj, tw = transition_arrays(m)
    rates: dict[int, float] = {}
    for i, j, w in zip(ti, tj, tw):
        rates[int(i)] = rates.get(int(i), 0.0) + float(w * pi[j, j].real)
    return sorted(rates.items())


def sample_trajectory_detect(
    m: AtomModel,
    initial: np.ndarray,
    t_bar: float,
    stream: np.random.Generator,
    grid=None,
) -> Trajectory:
    """Sample one detection-mode trajectory on [0, t_bar]."""
    return sample_one(m, initial, t_bar, stream, grid=grid, mode="detect")


def _drift_closed_form(m: AtomModel, psi0: np.ndarray, tau: float) -> tuple[np.ndarray, float]:
    """Amplitude decay of the drift semigroup on a unit vector.

    exp(tau L')[vv†] = (Gv)(Gv)† with G = diag(exp(-(iE_k + w_k/2) tau)),
    so the survival is just ||Gv||^2.
    """
    e = np.array(m.energies, dtype=np.float64)
    _, tj, tw = transition_arrays(m)
    w_level = np.zeros(m.n_levels)
    for j, w in zip(tj, tw):
        w_level[j] += w
    v = psi0 * np.exp(-(1j * e + 0.5 * w_level) * tau)
    surv = float(np.sum(np.abs(v) ** 2))
    return v / np.sqrt(surv), surv


def trajectory_log_density_detect(m: AtomModel, traj: Trajectory) -> float:
    """Recompute the log path density of a detection-mode trajectory.

    Every segment must match the renormalized drift flow started from the
    segment's initial state (the preceding jump's energy eigenstate); a
    departing sample raises ValidationError.
    """
    if traj.mode != "detect":
        raise ValidationError(f"expected a detect trajectory, got {traj.mode!r}")
    psi = as_state_vector(traj.initial)
    log_dens = 0.0
    t_prev = 0.0
    boundaries = [(ev.time, ev) for ev in traj.events] + [(traj.horizon, None)]
    for t_end, ev in boundaries:
        # validate samples strictly inside the segment (plus the horizon);
        # samples exactly on a jump time may carry either side of the jump
        hi = t_end + 1e-12 if ev is None else t_end - 1e-12
        for tc, sc in zip(traj.times, traj.states):
            if t_prev + 1e-12 < tc < hi:
                v, _ = _drift_closed_form(m, psi, tc - t_prev)
                dist = np.linalg.norm(np.outer(v, v.conj()) - np.outer(sc, sc.conj()))
                if dist > 1e-6:
                    raise ValidationError(
                        f"trajectory sample at t={tc:g} departs from the drift flow by {dist:.2e}"
                    )
        v_end, surv = _drift_closed_form(m, psi, t_end - t_prev)
        log_dens += np.log(surv)
        if ev is not None:
            pi_end = np.outer(v_end, v_end.conj())
            rates = dict(channel_rates(m, pi_end))
            if ev.channel not in rates or rates[ev.channel] <= 0.0:
                raise ValidationError(
                    f"jump at t={ev.time:g} lands on level {ev.channel} with zero feeding rate"
                )
            log_dens += np.log(rates[ev.channel])
            psi = np.zeros(m.n_levels, dtype=np.complex128)
            psi[ev.channel] = 1.0
            expected = np.abs(ev.post_state) ** 2
            if abs(expected[ev.channel] - 1.0) > 1e-9:
                raise ValidationError("post-jump state is not the destination energy eigenstate")
        t_prev = t_end
    return float(log_dens)
