"""Shared helpers for the test suite."""

import numpy as np


def random_hermitian(rng, n, scale=1.0):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (x + x.conj().T)


def random_pure(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def projector(v):
    return np.outer(v, np.conj(v))


def e3_of(v):
    """Third Bloch component of a two-level unit state, ground-first basis."""
    return abs(v[1]) ** 2 - abs(v[0]) ** 2


def ground_projector(n):
    p = np.zeros((n, n), dtype=complex)
    p[0, 0] = 1.0
    return p


def excited_projector():
    return np.diag([0.0, 1.0]).astype(complex)


def superposition_state():
    return np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
