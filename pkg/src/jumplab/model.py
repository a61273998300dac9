"""Atom model: levels, allowed transitions, coupling strength.

Levels are indexed 0..N-1 by increasing energy (ground state is index 0),
so every allowed transition (i, j) with j > i lowers the energy.  Units are
hbar = 1 throughout; for the standard two-level atom the level splitting is
the unit of frequency.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .linalg import LEVEL_CAP, CapacityError, ValidationError


class ConfigurationError(ValidationError):
    """The model description is inconsistent."""


@dataclass(frozen=True)
class AtomModel:
    """Immutable atom description, hashable so derived operators can be cached.

    energies: strictly increasing level energies E_0 < ... < E_{N-1}
    transitions: ((i, j, d_ij), ...) with j > i and d_ij != 0
    alpha: radiative coupling strength; configurations demand > 0, the type
        also admits 0 for the decoupled (closed-system) limit
    """

    energies: tuple[float, ...]
    transitions: tuple[tuple[int, int, complex], ...]
    alpha: float

    def __post_init__(self):
        n = len(self.energies)
        if n < 1:
            raise ConfigurationError("model.energies: need at least one level")
        if n > LEVEL_CAP:
            raise CapacityError(f"model.energies: {n} levels exceeds cap {LEVEL_CAP}")
        if any(not np.isfinite(e) for e in self.energies):
            raise ConfigurationError("model.energies: non-finite entry")
        if any(self.energies[k] >= self.energies[k + 1] for k in range(n - 1)):
            raise ConfigurationError("model.energies: must be strictly increasing")
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ConfigurationError(f"model.alpha: must be >= 0, got {self.alpha}")
        seen = set()
        for i, j, d in self.transitions:
            if not (0 <= i < j < n):
                raise ConfigurationError(
                    f"model.transitions: ({i}, {j}) needs 0 <= i < j < {n}"
                )
            if (i, j) in seen:
                raise ConfigurationError(f"model.transitions: duplicate pair ({i}, {j})")
            seen.add((i, j))
            if d == 0:
                raise ConfigurationError(f"model.transitions: zero amplitude on ({i}, {j})")

    @property
    def n_levels(self) -> int:
        return len(self.energies)

    def hamiltonian(self) -> np.ndarray:
        return np.diag(np.array(self.energies, dtype=np.complex128))

    def max_gap(self) -> float:
        return self.energies[-1] - self.energies[0] if self.n_levels > 1 else 0.0


def build_model(section: dict) -> AtomModel:
    """Build and validate an AtomModel from a parsed configuration section.

    Expected keys: energies (list of floats), transitions (list of
    [i, j, d] with d a number or an [re, im] pair), alpha (float > 0).
    """
    if not isinstance(section, dict):
        raise ConfigurationError("model: expected a mapping")
    for key in ("energies", "transitions", "alpha"):
        if key not in section:
            raise ConfigurationError(f"model.{key}: missing")
    try:
        energies = tuple(float(e) for e in section["energies"])
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"model.energies: {exc}") from exc
    transitions = []
    for k, item in enumerate(section["transitions"]):
        try:
            i, j, d = item
            d = complex(d[0], d[1]) if isinstance(d, (list, tuple)) else complex(d)
            transitions.append((int(i), int(j), d))
        except (TypeError, ValueError, IndexError) as exc:
            raise ConfigurationError(f"model.transitions[{k}]: {exc}") from exc
    try:
        alpha = float(section["alpha"])
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"model.alpha: {exc}") from exc
    if alpha <= 0:
        raise ConfigurationError(f"model.alpha: must be > 0, got {alpha}")
    return AtomModel(energies=energies, transitions=tuple(transitions), alpha=alpha)


def two_level_model(alpha: float, d: complex = 1.0, splitting: float = 1.0) -> AtomModel:
    """The standard two-level atom: ground at 0, excited at `splitting`."""
    return AtomModel(energies=(0.0, splitting), transitions=((0, 1, complex(d)),), alpha=alpha)


def ladder_model(n: int, alpha: float, d: complex = 1.0) -> AtomModel:
    """n levels with unit spacing and nearest-neighbor decays (k, k+1)."""
    return AtomModel(
        energies=tuple(float(k) for k in range(n)),
        transitions=tuple((k, k + 1, complex(d)) for k in range(n - 1)),
        alpha=alpha,
    )


def transition_operator(m: AtomModel, i: int, j: int) -> np.ndarray:
    """The lowering operator for transition (i, j): sole entry d_ij at row i, col j."""
    for ti, tj, d in m.transitions:
        if (ti, tj) == (i, j):
            out = np.zeros((m.n_levels, m.n_levels), dtype=np.complex128)
            out[i, j] = d
            return out
    raise LookupError(f"transition ({i}, {j}) not in the allowed set")


def check_connectivity(m: AtomModel) -> tuple[bool, dict[int, list[int]]]:
    """True iff every level can cascade down to the ground state.

    Returns (connected, witness) where witness maps each reachable level j
    to one decay chain [j, ..., 0].  Chains are strictly decreasing because
    every allowed transition lowers the level index.
    """
    n = m.n_levels
    down = {k: [] for k in range(n)}
    for i, j, _ in m.transitions:
        down[j].append(i)
    witness: dict[int, list[int]] = {0: [0]}
    # levels only decay to strictly lower ones, so a single upward sweep settles all
    for j in range(1, n):
        for i in sorted(down[j]):
            if i in witness:
                witness[j] = [j] + witness[i]
                break
    connected = all(j in witness for j in range(n))
    return connected, witness


@lru_cache(maxsize=None)
def transition_arrays(m: AtomModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(dest levels, source levels, alpha*|d|^2 weights) as flat arrays.

    The generator and both unravelings depend on the amplitudes only through
    these weights; phases enter nothing but the operators themselves.
    """
    ti = np.array([i for i, _, _ in m.transitions], dtype=np.int64)
    tj = np.array([j for _, j, _ in m.transitions], dtype=np.int64)
    tw = np.array([m.alpha * abs(d) ** 2 for _, _, d in m.transitions], dtype=np.float64)
    return ti, tj, tw
