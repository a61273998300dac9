"""Classical analogue: lattice diffusion and its Poisson-jump unraveling.

The infinite lattice is truncated to a periodic torus large enough that
wrap-around mass stays negligible; the torus generator conserves mass
exactly, and diffusion factorizes into one-dimensional kernels applied
axis by axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import ive

from .linalg import ValidationError

MASS_ATOL = 1e-12
WRAP_TOL = 1e-8


class DomainTooSmallError(ValidationError):
    """The torus is too small: wrap-around mass would exceed tolerance."""


def _axis_tail(radius: int, d_const: float, t: float) -> float:
    """Exact free-lattice mass a single axis carries beyond |x| > radius.

    The axes of the continuous-time walk are independent, each with heat
    kernel e^{-2Dt} I_x(2Dt); ive is the exponentially scaled Bessel.
    """
    if radius < 0:
        return 1.0
    ks = np.arange(-radius, radius + 1)
    return float(max(0.0, 1.0 - np.sum(ive(ks, 2.0 * d_const * t))))


def torus_side(d_const: float, nu: int, t_bar: float) -> int:
    """Smallest odd side L >= 8 ceil(sqrt(2 nu D t)) + 1 with wrap-around
    mass (from a point source) safely below tolerance."""
    side = int(8 * np.ceil(np.sqrt(2 * nu * d_const * t_bar)) + 1)
    while 1.0 - (1.0 - _axis_tail((side - 1) // 2, d_const, t_bar)) ** nu > 0.1 * WRAP_TOL:
        side += 2
    return side


def validate_lattice_density(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.float64)
    if rho.ndim < 1:
        raise ValidationError("density must have at least one axis")
    if np.any(rho < -MASS_ATOL):
        raise ValidationError(f"density has negative mass {rho.min():.3e}")
    if abs(rho.sum() - 1.0) > MASS_ATOL:
        raise ValidationError(f"density mass {rho.sum()!r} is not 1")
    return rho


def _line_kernel(side: int, d_const: float, t: float) -> np.ndarray:
    lap = -2.0 * np.eye(side)
    idx = np.arange(side)
    lap[idx, (idx + 1) % side] += 1.0
    lap[idx, (idx - 1) % side] += 1.0
    return scipy.linalg.expm(t * d_const * lap)


def wraparound_bound(rho0: np.ndarray, d_const: float, t: float) -> float:
    """Mass the free-lattice walk would carry past the torus half-width,
    measured from the farthest occupied site of the initial density."""
    rho0 = np.asarray(rho0)
    nu = rho0.ndim
    side = rho0.shape[0]
    support = np.argwhere(rho0 > 1e-300)
    if support.size == 0:
        return 0.0
    center = side // 2
    # worst-case L-infinity distance from any occupied site to the center
    reach = 0
    for site in support:
        off = np.max(np.abs(((site - center) + side // 2) % side - side // 2))
        reach = max(reach, int(off))
    free = (side - 1) // 2 - reach
    return float(min(1.0, 1.0 - (1.0 - _axis_tail(free, d_const, t)) ** nu))


def diffusion_evolve(rho0: np.ndarray, d_const: float, t: float) -> np.ndarray:
    """Heat semigroup exp(t D Laplacian) on the torus, applied per axis."""
    rho0 = validate_lattice_density(rho0)
    if d_const <= 0:
        raise ValidationError(f"diffusion constant must be > 0, got {d_const}")
    if t < 0:
        raise ValidationError(f"time must be >= 0, got {t}")
    if t == 0.0:
        return rho0
    if len(set(rho0.shape)) != 1:
        raise ValidationError("torus must have equal sides")
    bound = wraparound_bound(rho0, d_const, t)
    if bound > WRAP_TOL:
        raise DomainTooSmallError(
            f"wrap-around mass bound {bound:.2e} exceeds {WRAP_TOL}; enlarge the torus"
        )
    kernel = _line_kernel(rho0.shape[0], d_const, t)
    out = rho0
    for axis in range(rho0.ndim):
        out = np.moveaxis(np.tensordot(kernel, np.moveaxis(out, axis, 0), axes=(1, 0)), 0, axis)
    return np.clip(out, 0.0, None)


@dataclass(frozen=True)
class WalkPath:
    start: np.ndarray          # integer site, shape (nu,)
    times: np.ndarray          # strictly increasing jump times in (0, horizon)
    steps: np.ndarray          # (n, nu) unit lattice steps
    horizon: float

    def positions(self) -> np.ndarray:
        """Visited sites, starting at `start`, one row per segment."""
        if len(self.times) == 0:
            return self.start[None, :].copy()
        return np.vstack([self.start, self.start + np.cumsum(self.steps, axis=0)])


def sample_walk(
    d_const: float,
    nu: int,
    t_bar: float,
    stream: np.random.Generator,
    start=None,
) -> WalkPath:
    """Continuous-time walk: holding times Exp(2 nu D), directions uniform."""
    if d_const <= 0 or nu < 1 or t_bar <= 0:
        raise ValidationError("need D > 0, nu >= 1, horizon > 0")
    start = np.zeros(nu, dtype=np.int64) if start is None else np.asarray(start, dtype=np.int64)
    rate = 2.0 * nu * d_const
    times = []
    steps = []
    t = 0.0
    while True:
        t += stream.exponential(1.0 / rate)
        if t >= t_bar:
            break
        d = int(stream.integers(0, 2 * nu))
        step = np.zeros(nu, dtype=np.int64)
        step[d % nu] = 1 if d < nu else -1
        times.append(t)
        steps.append(step)
    return WalkPath(
        start=start,
        times=np.array(times, dtype=np.float64),
        steps=np.array(steps, dtype=np.int64).reshape(len(steps), nu),
        horizon=float(t_bar),
    )


def walk_log_density(path: WalkPath, d_const: float, nu: int) -> float:
    """log of the path density D^n e^{-2 nu D T} in the jump times."""
    if path.times.size and (np.any(np.diff(path.times) <= 0) or path.times[0] <= 0 or path.times[-1] >= path.horizon):
        raise ValidationError("jump times must be strictly increasing inside (0, horizon)")
    if path.steps.size and np.any(np.sum(np.abs(path.steps), axis=1) != 1):
        raise ValidationError("each step must be a unit lattice vector")
    n = len(path.times)
    return float(n * np.log(d_const) - 2.0 * nu * d_const * path.horizon)


def lattice_entropy(rho: np.ndarray) -> float:
    """Shannon entropy -sum rho ln rho with 0 ln 0 := 0."""
    rho = validate_lattice_density(rho)
    flat = rho[rho > 0]
    return max(0.0, float(-np.sum(flat * np.log(flat))))
