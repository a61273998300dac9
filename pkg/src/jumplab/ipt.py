"""Eigenvalue/eigenprojection continuation along a matrix curve.

Instead of rediagonalizing H(t) at every parameter value, the eigenpairs
are integrated: eigenvalues by the first-order trace rule, projectors by
rotation with the anti-selfadjoint generator built from the off-diagonal
part of dH/dt.  Crossings invalidate the generator and are reported as
errors naming the parameter value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linalg import NumericalError, ValidationError, hermitian_eigen, require_hermitian

GAP_MIN_RTOL = 1e-6
PATH_ORTHO_TOL = 1e-8


class NearDegeneracyError(NumericalError):
    """Two eigenvalue paths approached each other below the safe gap."""


@dataclass
class EigenPath:
    ts: np.ndarray               # grid in [0, 1]
    energies: np.ndarray         # (len(ts), N)
    projectors: np.ndarray       # (len(ts), N, N, N)


def validate_eigenpath(path: EigenPath) -> EigenPath:
    n = path.energies.shape[1]
    eye = np.eye(n)
    for k in range(len(path.ts)):
        ps = path.projectors[k]
        if np.linalg.norm(ps.sum(axis=0) - eye) > PATH_ORTHO_TOL:
            raise ValidationError(f"projectors at t={path.ts[k]:g} do not resolve the identity")
        for a in range(n):
            if np.linalg.norm(ps[a] @ ps[a] - ps[a]) > PATH_ORTHO_TOL:
                raise ValidationError(f"projector {a} at t={path.ts[k]:g} is not idempotent")
            for b in range(a + 1, n):
                if np.linalg.norm(ps[a] @ ps[b]) > PATH_ORTHO_TOL:
                    raise ValidationError(
                        f"projectors {a}, {b} at t={path.ts[k]:g} are not orthogonal"
                    )
    return path


def _gap_check(energies: np.ndarray, scale: float, t: float):
    order = np.sort(energies)
    gaps = np.diff(order)
    if gaps.size and gaps.min() < GAP_MIN_RTOL * max(scale, 1e-12):
        a = int(np.argmin(gaps))
        raise NearDegeneracyError(
            f"eigenvalue gap {gaps.min():.3e} below threshold near parameter t={t:g}"
            f" (levels with sorted values {order[a]:.6g}, {order[a + 1]:.6g})"
        )


def ipt_generator(h: np.ndarray, hdot: np.ndarray, eigs=None) -> np.ndarray:
    """Rotation generator sum_{i != j} P_i Hdot P_j / (E_i - E_j)."""
    h = require_hermitian(h)
    hdot = require_hermitian(hdot)
    if eigs is None:
        eigs = hermitian_eigen(h)
    w, v = eigs.eigenvalues, eigs.eigenvectors
    scale = max(np.max(np.abs(w)), 1e-12)
    diffs = w[:, None] - w[None, :]
    off = ~np.eye(len(w), dtype=bool)
    if np.min(np.abs(diffs[off])) < GAP_MIN_RTOL * scale:
        i, j = divmod(int(np.argmin(np.abs(diffs) + np.eye(len(w)) * 1e300)), len(w))
        raise NearDegeneracyError(
            f"eigenvalues {w[i]:.6g} and {w[j]:.6g} too close for the rotation generator"
        )
    m = v.conj().T @ hdot @ v
    coef = np.zeros_like(m)
    coef[off] = m[off] / diffs[off]
    return v @ coef @ v.conj().T


def _stack_rhs(hdot: np.ndarray, energies: np.ndarray, projectors: np.ndarray):
    n = len(energies)
    diffs = energies[:, None] - energies[None, :]
    de = np.array([np.trace(projectors[j] @ hdot).real for j in range(n)])
    s = np.zeros_like(hdot)
    for i in range(n):
        for j in range(n):
            if i != j:
                s += projectors[i] @ hdot @ projectors[j] / diffs[i, j]
    dp = np.array([-(s @ projectors[j] - projectors[j] @ s) for j in range(n)])
    return de, dp


def _cleanup(projectors: np.ndarray) -> np.ndarray:
    """Pull the projector stack back onto the flag manifold by jointly
    diagonalizing a weighted sum; label j keeps the eigenvector whose
    weight-eigenvalue rounds to j + 1."""
    n = projectors.shape[0]
    m = sum((j + 1.0) * 0.5 * (projectors[j] + projectors[j].conj().T) for j in range(n))
    w, v = np.linalg.eigh(m)
    out = np.zeros_like(projectors)
    for k in range(n):
        j = int(round(w[k])) - 1
        if not 0 <= j < n:
            raise NumericalError("projector stack drifted too far to re-orthogonalize")
        out[j] = np.outer(v[:, k], v[:, k].conj())
    return out


def ipt_integrate(curve: Callable[[float], tuple[np.ndarray, np.ndarray]], steps: int) -> EigenPath:
    """RK4-integrate eigenpairs of a Hermitian curve over t in [0, 1].

    `curve(t)` returns (H(t), dH/dt(t)); H(0) must be diagonal with simple
    spectrum, which seeds the path with the basis projectors.
    """
    if steps < 1:
        raise ValidationError("need at least one step")
    h0, _ = curve(0.0)
    h0 = require_hermitian(h0)
    n = h0.shape[0]
    if np.max(np.abs(h0 - np.diag(np.diag(h0)))) > 1e-12:
        raise ValidationError("H(0) must be diagonal")
    energies = np.diag(h0).real.copy()
    scale = max(np.max(np.abs(energies)), 1.0)
    _gap_check(energies, scale, 0.0)
    projectors = np.array([np.diag((np.arange(n) == j).astype(np.complex128)) for j in range(n)])

    ts = np.linspace(0.0, 1.0, steps + 1)
    path_e = np.zeros((steps + 1, n))
    path_p = np.zeros((steps + 1, n, n, n), dtype=np.complex128)
    path_e[0] = energies
    path_p[0] = projectors
    h = 1.0 / steps
    for k in range(steps):
        t = ts[k]
        _, hd1 = curve(t)
        _, hd2 = curve(t + 0.5 * h)
        _, hd4 = curve(t + h)
        e1, p1 = _stack_rhs(hd1, energies, projectors)
        e2, p2 = _stack_rhs(hd2, energies + 0.5 * h * e1, projectors + 0.5 * h * p1)
        e3, p3 = _stack_rhs(hd2, energies + 0.5 * h * e2, projectors + 0.5 * h * p2)
        e4, p4 = _stack_rhs(hd4, energies + h * e3, projectors + h * p3)
        energies = energies + (h / 6.0) * (e1 + 2 * e2 + 2 * e3 + e4)
        projectors = _cleanup(projectors + (h / 6.0) * (p1 + 2 * p2 + 2 * p3 + p4))
        scale = max(np.max(np.abs(energies)), 1.0)
        _gap_check(energies, scale, ts[k + 1])
        path_e[k + 1] = energies
        path_p[k + 1] = projectors
    return EigenPath(ts=ts, energies=path_e, projectors=path_p)


def linear_curve(h0: np.ndarray, v: np.ndarray) -> Callable[[float], tuple[np.ndarray, np.ndarray]]:
    """The standard straight-line curve H(t) = H0 + t V."""
    h0 = require_hermitian(h0)
    v = require_hermitian(v)
    return lambda t: (h0 + t * v, v)
