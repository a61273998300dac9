"""Closed-form two-level layer used to validate the generic machinery and
exposed for fast exact runs.

Basis convention: levels are stored ground-first (index 0 = ground,
index 1 = excited), so the Pauli matrices below are the textbook ones
conjugated by the basis swap; the Bloch vector keeps its usual meaning
(n3 = +1 excited, n3 = -1 ground) and all component formulas carry over
unchanged.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from .linalg import ValidationError
from .lindblad import validate_density
from .model import AtomModel
from .sampling import Trajectory

SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, 1j], [-1j, 0]],
        [[-1, 0], [0, 1]],
    ],
    dtype=np.complex128,
)

BLOCH_NORM_TOL = 1e-12


def bloch_from_density(omega: np.ndarray) -> np.ndarray:
    """Bloch components n_k = Re Tr(w sigma_k) of a 2x2 density matrix."""
    omega = validate_density(omega)
    if omega.shape != (2, 2):
        raise ValidationError("Bloch parametrization needs a 2x2 density")
    n = np.array([np.trace(omega @ s).real for s in SIGMA])
    if np.linalg.norm(n) > 1.0 + BLOCH_NORM_TOL:
        raise ValidationError(f"Bloch vector has norm {np.linalg.norm(n)} > 1")
    return n


def density_from_bloch(n: np.ndarray) -> np.ndarray:
    """Density matrix (1 + n . sigma)/2 for |n| <= 1."""
    n = np.asarray(n, dtype=np.float64)
    if n.shape != (3,):
        raise ValidationError("Bloch vector must have three components")
    if np.linalg.norm(n) > 1.0 + BLOCH_NORM_TOL:
        raise ValidationError(f"Bloch vector has norm {np.linalg.norm(n)} > 1")
    return 0.5 * (np.eye(2, dtype=np.complex128) + np.einsum("k,kab->ab", n, SIGMA))


def pure_bloch(e3: float, gamma: float = 0.0) -> np.ndarray:
    r = np.sqrt(max(0.0, 1.0 - e3 * e3))
    return np.array([r * np.cos(gamma), r * np.sin(gamma), e3])


def ensemble_bloch(e3_0: float, gamma: float, alpha: float, t: float) -> np.ndarray:
    """Exact ensemble evolution of a pure initial state on the Bloch ball.

    Transverse components decay at alpha/2 while precessing at unit angular
    velocity; the third component relaxes as (1 + e3) e^{-alpha t} - 1.
    """
    if abs(e3_0) > 1.0 + BLOCH_NORM_TOL:
        raise ValidationError(f"|e3| must be <= 1, got {e3_0}")
    if t < 0:
        raise ValidationError(f"time must be >= 0, got {t}")
    r = np.sqrt(max(0.0, 1.0 - e3_0 * e3_0)) * np.exp(-0.5 * alpha * t)
    return np.array(
        [
            r * np.cos(gamma + t),
            r * np.sin(gamma + t),
            (1.0 + e3_0) * np.exp(-alpha * t) - 1.0,
        ]
    )


def _nodetect_potential(e: float) -> float:
    # antiderivative of 1/((1+e)(1-e)(2+e)); strictly increasing on (-1, 1)
    return 0.5 * np.log1p(e) - np.log1p(-e) / 6.0 - np.log(2.0 + e) / 3.0


def nodetect_flow_e3(e3_0: float, alpha: float, t: float) -> float:
    """Third Bloch component of the no-detection no-jump flow.

    The cubic ODE e3' = -(alpha/2)(1+e3)(1-e3)(2+e3) is solved by inverting
    its strictly monotone first integral with a bracketed root find.  (The
    alpha/2 prefactor is the one consistent with first-order eigenprojector
    perturbation of P + dt L[P] and with the survival integral below; see
    tests/test_twolevel.py for the finite-difference cross-check.)
    """
    if abs(e3_0) > 1.0 + BLOCH_NORM_TOL:
        raise ValidationError(f"|e3| must be <= 1, got {e3_0}")
    if t < 0:
        raise ValidationError(f"time must be >= 0, got {t}")
    e3_0 = float(np.clip(e3_0, -1.0, 1.0))
    if t == 0.0 or abs(e3_0) == 1.0:
        return e3_0
    target = _nodetect_potential(e3_0) - 0.5 * alpha * t
    lo = -1.0 + 1e-16
    if _nodetect_potential(lo) >= target:
        return -1.0
    return float(brentq(lambda e: _nodetect_potential(e) - target, lo, e3_0, xtol=1e-15))


def nodetect_survival(e3_start: float, e3_end: float) -> float:
    """No-jump probability along the no-detection flow between two e3 values.

    Closed form of exp(-integral of the hazard (alpha/4)(1+e3)^2), with the
    hazard rewritten as half the integral of (1+y)/((1-y)(2+y)) over e3.
    Only meaningful off the fixed points; use
    :func:`nodetect_survival_time` for |e3| = 1.
    """
    if abs(e3_start) >= 1.0 or abs(e3_end) > 1.0:
        raise ValidationError("survival between e3 values needs |e3_start| < 1")
    if e3_end > e3_start + 1e-12:
        raise ValidationError("the no-jump flow only decreases e3")
    gamma = 0.5 * (
        (2.0 / 3.0) * np.log((1.0 - e3_end) / (1.0 - e3_start))
        + (1.0 / 3.0) * np.log((2.0 + e3_end) / (2.0 + e3_start))
    )
    return float(np.exp(-gamma))


def nodetect_survival_time(e3_0: float, alpha: float, t: float) -> float:
    """No-jump probability over a time span, fixed points included."""
    if e3_0 >= 1.0 - 1e-15:
        return float(np.exp(-alpha * t))
    if e3_0 <= -1.0 + 1e-15:
        return 1.0
    return nodetect_survival(e3_0, nodetect_flow_e3(e3_0, alpha, t))


def detect_flow_e3(e3_0: float, alpha: float, t: float) -> float:
    """Third Bloch component of the detection-mode no-emission flow:
    tanh(atanh(e3_0) - alpha t / 2), with +-1 exact fixed points."""
    if abs(e3_0) > 1.0 + BLOCH_NORM_TOL:
        raise ValidationError(f"|e3| must be <= 1, got {e3_0}")
    if t < 0:
        raise ValidationError(f"time must be >= 0, got {t}")
    e3_0 = float(np.clip(e3_0, -1.0, 1.0))
    if abs(e3_0) == 1.0:
        return e3_0
    return float(np.tanh(np.arctanh(e3_0) - 0.5 * alpha * t))


def detect_survival(e3_0: float, e3_t: float) -> float:
    """No-emission probability between two e3 values: (1-e3_0)/(1-e3_t)."""
    if e3_0 <= -1.0 + 1e-15:
        return 1.0
    if e3_0 >= 1.0 - 1e-15 or abs(e3_t) > 1.0:
        raise ValidationError("use detect_survival_time for the excited fixed point")
    return float((1.0 - e3_0) / (1.0 - e3_t))


def detect_survival_time(e3_0: float, alpha: float, t: float) -> float:
    """No-emission probability over a time span, fixed points included."""
    if e3_0 >= 1.0 - 1e-15:
        return float(np.exp(-alpha * t))
    if e3_0 <= -1.0 + 1e-15:
        return 1.0
    return detect_survival(e3_0, detect_flow_e3(e3_0, alpha, t))


def _e3_of(state: np.ndarray) -> float:
    # third Bloch component of a unit state vector, ground-first basis
    return float(abs(state[1]) ** 2 - abs(state[0]) ** 2)


def trajectory_density_twolevel(traj: Trajectory, mode: str, alpha: float) -> float:
    """Closed-form log path density of a two-level trajectory.

    Survival factors come from the closed-form integrals and jump factors
    from the closed-form hazards, so this is an independent check on the
    generic evaluators.
    """
    if traj.initial.shape != (2,):
        raise ValidationError("closed forms apply to two-level trajectories only")
    if mode not in ("nodetect", "detect"):
        raise ValidationError(f"unknown mode {mode!r}")
    flow = nodetect_flow_e3 if mode == "nodetect" else detect_flow_e3
    surv = nodetect_survival_time if mode == "nodetect" else detect_survival_time

    log_dens = 0.0
    e3 = _e3_of(traj.initial)
    t_prev = 0.0
    for ev in traj.events:
        span = ev.time - t_prev
        log_dens += np.log(surv(e3, alpha, span))
        e3_pre = flow(e3, alpha, span)
        if mode == "nodetect":
            rate = 0.25 * alpha * (1.0 + e3_pre) ** 2
        else:
            rate = 0.5 * alpha * (1.0 + e3_pre)
        log_dens += np.log(rate)
        e3 = _e3_of(ev.post_state)
        t_prev = ev.time
    log_dens += np.log(surv(e3, alpha, traj.horizon - t_prev))
    return float(log_dens)


def require_two_level(m: AtomModel) -> AtomModel:
    if m.n_levels != 2 or len(m.transitions) != 1 or abs(m.transitions[0][2]) != 1.0:
        raise ValidationError(
            "closed forms assume the standard two-level atom with unit amplitude"
        )
    return m
