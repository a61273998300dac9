"""Dense complex linear algebra for small Hilbert spaces.

Everything here operates on plain ``numpy`` arrays of ``complex128``.
Hermitian matrices are never wrapped in a class; callers validate with
:func:`require_hermitian` where an interface demands it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

# Centralized tolerance table.  All modules import from here so that a
# single change retunes the whole package.
HERMITIAN_ATOL = 1e-12        # max |M - M†| entry allowed by validators
RECONSTRUCT_RTOL = 1e-10      # eigendecomposition rebuild, relative Frobenius
DEGENERATE_RTOL = 1e-9        # relative gap below which eigenvalues tie
RANK1_GAP_RTOL = 1e-9         # dominant-eigenvalue separation for retraction
TRACE_ATOL = 1e-10            # unit-trace check for density matrices
NEG_EIG_TOL = 1e-9            # positivity slack for density matrices
RATE_FLOOR = 0.0              # jump rates are clipped from below at this
LEVEL_CAP = 16                # hard cap on atom levels (superops <= 256x256)


class ValidationError(ValueError):
    """An input violates a documented precondition."""


class NumericalError(RuntimeError):
    """A numerical operation failed (overflow, lost positivity, ...)."""


class DegenerateRetractionError(NumericalError):
    """Rank-1 retraction is ill-posed: top eigenvalue not separated."""


class CapacityError(ValidationError):
    """Requested dimension exceeds the supported level cap."""


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in descending order; eigenvectors as orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def require_hermitian(m: np.ndarray, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise ValidationError("matrix has non-finite entries")
    dev = np.max(np.abs(m - m.conj().T))
    if dev > atol:
        raise ValidationError(f"matrix is not Hermitian: max |M - M†| = {dev:.3e}")
    return m


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate a vector's global phase so its first significant entry is real > 0."""
    v = np.asarray(v, dtype=np.complex128)
    mags = np.abs(v)
    big = np.max(mags)
    if big == 0.0:
        return v
    k = int(np.argmax(mags > 1e-12 * big))
    ph = v[k] / abs(v[k])
    return v * np.conj(ph)


def hermitian_eigen(h: np.ndarray) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, descending eigenvalues.

    Within degenerate blocks (relative gap < DEGENERATE_RTOL) the columns are
    phase-fixed and ordered lexicographically so repeated runs agree.
    """
    h = require_hermitian(h)
    w, v = np.linalg.eigh(h)
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    scale = max(np.max(np.abs(w)), 1.0)
    # canonical phases everywhere, then a deterministic order inside ties
    for k in range(v.shape[1]):
        v[:, k] = fix_phase(v[:, k])
    start = 0
    for k in range(1, len(w) + 1):
        if k == len(w) or abs(w[start] - w[k]) > DEGENERATE_RTOL * scale:
            if k - start > 1:
                block = v[:, start:k]
                keys = [
                    tuple(np.round(np.ascontiguousarray(block[:, c]).view(np.float64), 9))
                    for c in range(k - start)
                ]
                order = sorted(range(k - start), key=lambda c: keys[c])
                v[:, start:k] = block[:, order]
            start = k
    return EigenDecomposition(eigenvalues=w, eigenvectors=v)


def reconstruct(eig: EigenDecomposition) -> np.ndarray:
    return (eig.eigenvectors * eig.eigenvalues) @ eig.eigenvectors.conj().T


def matrix_exp(m: np.ndarray) -> np.ndarray:
    """Matrix exponential (Padé scaling-and-squaring, as in scipy)."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise ValidationError("matrix has non-finite entries")
    with np.errstate(over="ignore", invalid="ignore"):
        out = scipy.linalg.expm(m)
    if not np.all(np.isfinite(out.view(np.float64))):
        raise NumericalError("matrix exponential overflowed")
    return out


def project_rank1(omega: np.ndarray) -> np.ndarray:
    """Retract a near-rank-1 positive matrix to its dominant eigenprojector."""
    eig = hermitian_eigen(omega)
    w = eig.eigenvalues
    scale = max(abs(w[0]), 1e-300)
    if len(w) > 1 and (w[0] - w[1]) / scale <= RANK1_GAP_RTOL:
        raise DegenerateRetractionError(
            f"top eigenvalues {w[0]:.6g}, {w[1]:.6g} too close for rank-1 retraction"
        )
    v = eig.eigenvectors[:, 0]
    return np.outer(v, v.conj())


def dominant_eigvec(omega: np.ndarray) -> np.ndarray:
    """Unit dominant eigenvector with the canonical phase; same gap rule as
    :func:`project_rank1`."""
    eig = hermitian_eigen(omega)
    w = eig.eigenvalues
    scale = max(abs(w[0]), 1e-300)
    if len(w) > 1 and (w[0] - w[1]) / scale <= RANK1_GAP_RTOL:
        raise DegenerateRetractionError("degenerate top eigenvalue")
    return fix_phase(eig.eigenvectors[:, 0])
