"""Deterministic ensemble-state layer: generator, its two-part split,
exact propagation through the vectorized superoperator, and entropy."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .linalg import (
    LEVEL_CAP,
    NEG_EIG_TOL,
    TRACE_ATOL,
    CapacityError,
    NumericalError,
    ValidationError,
    matrix_exp,
    require_hermitian,
)
from .model import AtomModel, transition_arrays


def validate_density(omega: np.ndarray) -> np.ndarray:
    """Check unit trace and positivity (within the shared tolerances)."""
    omega = require_hermitian(omega)
    tr = omega.trace().real
    if abs(tr - 1.0) > TRACE_ATOL:
        raise ValidationError(f"density trace {tr!r} is not 1")
    wmin = np.linalg.eigvalsh(omega)[0]
    if wmin < -NEG_EIG_TOL:
        raise NumericalError(f"density has eigenvalue {wmin:.3e} < -{NEG_EIG_TOL}")
    return omega


def generator_apply(m: AtomModel, omega: np.ndarray) -> np.ndarray:
    """Full generator: -i[H, w] + sum of single-entry dissipators.

    Accepts any Hermitian input (projectors included); output is Hermitian
    and traceless.
    """
    omega = require_hermitian(omega)
    if omega.shape[0] != m.n_levels:
        raise ValidationError("dimension mismatch between state and model")
    lp, ldp = generator_split(m, omega)
    return lp + ldp


def generator_split(m: AtomModel, omega: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(drift part, feeding part) of the generator.

    The drift part carries the commutator and the anticommutator losses; the
    feeding part is the completely positive sum of D w D† terms.  They add up
    to :func:`generator_apply` exactly.
    """
    omega = np.asarray(omega, dtype=np.complex128)
    if omega.shape[0] != m.n_levels:
        raise ValidationError("dimension mismatch between state and model")
    e = np.array(m.energies)
    ti, tj, tw = transition_arrays(m)
    lp = -1j * (e[:, None] - e[None, :]) * omega
    ldp = np.zeros_like(omega)
    for i, j, w in zip(ti, tj, tw):
        ldp[i, i] += w * omega[j, j]
        lp[j, :] -= 0.5 * w * omega[j, :]
        lp[:, j] -= 0.5 * w * omega[:, j]
    return lp, ldp


@lru_cache(maxsize=None)
def build_superoperator(m: AtomModel, which: str = "full") -> np.ndarray:
    """N^2 x N^2 matrix acting on column-vectorized states.

    Convention: vec stacks columns (Fortran order), so A w B maps to
    (B^T (x) A) vec(w).  `which` selects the full generator or its drift
    part ("prime").
    """
    if which not in ("full", "prime"):
        raise ValidationError(f"unknown superoperator kind {which!r}")
    n = m.n_levels
    if n > LEVEL_CAP:
        raise CapacityError(f"{n} levels exceeds cap {LEVEL_CAP}")
    eye = np.eye(n, dtype=np.complex128)
    h = m.hamiltonian()
    sup = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for i, j, d in m.transitions:
        dij = np.zeros((n, n), dtype=np.complex128)
        dij[i, j] = d
        dd = dij.conj().T @ dij
        if which == "full":
            sup += m.alpha * np.kron(dij.conj(), dij)
        sup -= 0.5 * m.alpha * (np.kron(eye, dd) + np.kron(dd.T, eye))
    sup.setflags(write=False)
    return sup


def vec(omega: np.ndarray) -> np.ndarray:
    return np.asarray(omega, dtype=np.complex128).flatten(order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    n = int(round(np.sqrt(v.size)))
    return v.reshape((n, n), order="F")


def ensemble_evolve(m: AtomModel, omega0: np.ndarray, t: float) -> np.ndarray:
    """Exact ensemble propagation: exp(t L) applied to a density matrix."""
    if t < 0:
        raise ValidationError(f"time must be >= 0, got {t}")
    omega0 = validate_density(omega0)
    if t == 0.0:
        return omega0
    sup = build_superoperator(m, "full")
    out = unvec(matrix_exp(t * sup) @ vec(omega0))
    out = 0.5 * (out + out.conj().T)
    return validate_density(out)


def entropy(omega: np.ndarray) -> float:
    """Von Neumann entropy -Tr(w ln w), natural log, 0 ln 0 := 0."""
    omega = validate_density(omega)
    w = np.linalg.eigvalsh(omega)
    if w[0] < -NEG_EIG_TOL:
        raise NumericalError(f"eigenvalue {w[0]:.3e} too negative for entropy")
    w = np.clip(w, 0.0, None)
    nz = w[w > 0]
    return max(0.0, float(-np.sum(nz * np.log(nz))))
