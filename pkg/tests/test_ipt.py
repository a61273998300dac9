import numpy as np
import pytest

import jumplab as jl
from jumplab.ipt import (
    NearDegeneracyError,
    ipt_generator,
    ipt_integrate,
    linear_curve,
    validate_eigenpath,
)
from jumplab.linalg import hermitian_eigen
from jumplab.nodetect import nojump_rhs, survival_log_rhs
from util import projector, random_hermitian, random_pure


def test_generator_zero_for_zero_velocity():
    h = np.diag([0.0, 1.0, 3.0]).astype(complex)
    assert np.allclose(ipt_generator(h, np.zeros((3, 3))), 0.0, atol=1e-15)


def test_generator_zero_for_codiagonal_velocity():
    h = np.diag([0.0, 1.0, 3.0]).astype(complex)
    hdot = np.diag([0.5, -1.0, 2.0]).astype(complex)
    assert np.allclose(ipt_generator(h, hdot), 0.0, atol=1e-14)


def test_generator_two_by_two_hand_value():
    h = np.diag([0.0, 1.0]).astype(complex)
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    s = ipt_generator(h, sx)
    assert np.max(np.abs(s + s.conj().T)) <= 1e-12
    assert abs(s[0, 0]) <= 1e-14 and abs(s[1, 1]) <= 1e-14
    assert abs(abs(s[0, 1]) - 1.0) <= 1e-12


def test_generator_antiselfadjoint_random():
    rng = np.random.default_rng(60)
    for _ in range(10):
        h = random_hermitian(rng, 4, scale=2.0)
        hdot = random_hermitian(rng, 4)
        s = ipt_generator(h, hdot)
        assert np.max(np.abs(s + s.conj().T)) <= 1e-10


def test_generator_near_degeneracy_error():
    h = np.diag([0.0, 1e-9, 1.0]).astype(complex)
    with pytest.raises(NearDegeneracyError):
        ipt_generator(h, np.eye(3, dtype=complex))


def test_integrate_constant_curve():
    h0 = np.diag([0.0, 1.0, 2.5]).astype(complex)
    path = ipt_integrate(lambda t: (h0, np.zeros((3, 3), dtype=complex)), 20)
    validate_eigenpath(path)
    assert np.allclose(path.energies[-1], [0.0, 1.0, 2.5], atol=1e-14)
    assert np.allclose(path.projectors[0], path.projectors[-1], atol=1e-14)


def test_integrate_two_level_terminal_values():
    h0 = np.diag([0.0, 1.0]).astype(complex)
    v = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    path = ipt_integrate(linear_curve(h0, v), 200)
    want = np.array([(1 - np.sqrt(5)) / 2, (1 + np.sqrt(5)) / 2])
    assert np.max(np.abs(np.sort(path.energies[-1]) - want)) <= 1e-6


def test_first_order_energy_response():
    rng = np.random.default_rng(61)
    h0 = np.diag([0.0, 1.0, 2.0]).astype(complex)
    v = random_hermitian(rng, 3)
    for t in (1e-3, 5e-4):
        exact = hermitian_eigen(h0 + t * v)
        # branch j pairs with the sorted-ascending eigenvalue order of h0
        got = np.sort(exact.eigenvalues)
        first_order = np.array([h0[j, j].real + t * v[j, j].real for j in range(3)])
        assert np.max(np.abs(got - first_order)) <= 10 * t * t * np.linalg.norm(v) ** 2


def test_integrate_matches_direct_diagonalization_checkpoints():
    rng = np.random.default_rng(62)
    count = 0
    for _ in range(20):
        h0 = np.diag(np.sort(rng.normal(size=5) * 2.0)).astype(complex)
        if np.min(np.diff(np.diag(h0).real)) < 0.2:
            continue
        v = random_hermitian(rng, 5)
        try:
            path = ipt_integrate(linear_curve(h0, v), 220)
        except NearDegeneracyError:
            continue
        validate_eigenpath(path)
        for k in range(0, 221, 22):  # 11 checkpoints
            t = path.ts[k]
            exact = np.sort(hermitian_eigen(h0 + t * v).eigenvalues)
            assert np.max(np.abs(np.sort(path.energies[k]) - exact)) <= 1e-6
        count += 1
    assert count >= 10


def test_integrate_reports_crossing():
    h0 = np.diag([0.0, 1.0]).astype(complex)
    v = np.diag([1.0, -1.0]).astype(complex)  # levels cross at t = 0.5
    with pytest.raises(NearDegeneracyError) as excinfo:
        ipt_integrate(linear_curve(h0, v), 100)
    assert "t=" in str(excinfo.value)


def test_perturbation_formulas_reproduce_jump_quantities(two_level, ladder3):
    """First-order perturbation of P + dt L[P] (top branch) recovers the
    survival slope and the no-jump flow direction of the unraveling."""
    rng = np.random.default_rng(63)
    for m in (two_level, ladder3):
        n = m.n_levels
        for _ in range(5):
            pi = projector(random_pure(rng, n))
            lpi = jl.generator_apply(m, pi)
            dt = 1e-4

            def top_pair(eps):
                w, v = np.linalg.eigh(pi + eps * lpi)
                return w[-1], np.outer(v[:, -1], v[:, -1].conj())

            def central(eps):
                wp, pp = top_pair(eps)
                wm, pm = top_pair(-eps)
                return (wp - wm) / (2 * eps), (pp - pm) / (2 * eps)

            # Richardson-extrapolated central differences: O(dt^4) residue
            w1, p1 = central(dt)
            w2, p2 = central(dt / 2)
            assert abs((4 * w2 - w1) / 3 - survival_log_rhs(m, pi)) <= 1e-8
            assert np.max(np.abs((4 * p2 - p1) / 3 - nojump_rhs(m, pi))) <= 1e-8


def test_rk4_convergence_order():
    rng = np.random.default_rng(64)
    h0 = np.diag([0.0, 1.2, 2.1, 3.3, 4.0]).astype(complex)
    v = random_hermitian(rng, 5)
    exact = np.sort(hermitian_eigen(h0 + v).eigenvalues)

    def err(steps):
        path = ipt_integrate(linear_curve(h0, v), steps)
        return np.max(np.abs(np.sort(path.energies[-1]) - exact))

    e20, e40 = err(20), err(40)
    assert np.log2(e20 / e40) >= 3.5
