import numpy as np
import pytest

from jumplab.linalg import (
    DegenerateRetractionError,
    NumericalError,
    ValidationError,
    hermitian_eigen,
    matrix_exp,
    project_rank1,
    reconstruct,
)
from util import projector, random_hermitian, random_pure


def test_eigen_identity():
    eig = hermitian_eigen(np.eye(2, dtype=complex))
    assert np.allclose(eig.eigenvalues, [1.0, 1.0])
    assert np.allclose(eig.eigenvectors.conj().T @ eig.eigenvectors, np.eye(2), atol=1e-12)


def test_eigen_diagonal_descending():
    eig = hermitian_eigen(np.diag([0.3, 0.7]).astype(complex))
    assert np.allclose(eig.eigenvalues, [0.7, 0.3])


def test_eigen_reconstruction_random():
    rng = np.random.default_rng(42)
    h = random_hermitian(rng, 5)
    eig = hermitian_eigen(h)
    assert np.linalg.norm(reconstruct(eig) - h) <= 1e-10 * np.linalg.norm(h)
    assert np.linalg.norm(eig.eigenvectors.conj().T @ eig.eigenvectors - np.eye(5)) <= 1e-10


def test_eigen_rebuild_many_sizes():
    rng = np.random.default_rng(7)
    for n in (2, 3, 4, 6):
        for _ in range(5):
            h = random_hermitian(rng, n, scale=3.0)
            eig = hermitian_eigen(h)
            assert np.linalg.norm(reconstruct(eig) - h) <= 1e-10 * max(np.linalg.norm(h), 1)


def test_eigen_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        hermitian_eigen(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))


def test_eigen_deterministic_on_degenerate():
    h = np.eye(3, dtype=complex)
    a = hermitian_eigen(h)
    b = hermitian_eigen(h)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


def test_matrix_exp_zero():
    assert np.allclose(matrix_exp(np.zeros((3, 3))), np.eye(3), atol=1e-15)


def test_matrix_exp_diagonal():
    out = matrix_exp(np.diag([1.5, -0.3]).astype(complex))
    assert np.allclose(out, np.diag([np.exp(1.5), np.exp(-0.3)]), rtol=1e-13)


def test_matrix_exp_nilpotent_exact():
    # truncated series is exact: exp([[0,1],[0,0]]) = I + N
    out = matrix_exp(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert np.allclose(out, np.array([[1.0, 1.0], [0.0, 1.0]]), atol=1e-15)


def test_matrix_exp_commuting_product():
    a = np.diag([0.2, -1.1, 0.4]).astype(complex)
    b = np.diag([-0.9, 0.3, 2.2]).astype(complex)
    lhs = matrix_exp(a + b)
    rhs = matrix_exp(a) @ matrix_exp(b)
    assert np.allclose(lhs, rhs, rtol=1e-12)


def test_matrix_exp_accuracy_at_large_norm():
    # relative accuracy holds up to norm ~ 50; oracle: spectral calculus of
    # an anti-Hermitian matrix (exact unitary exponential)
    rng = np.random.default_rng(19)
    h = random_hermitian(rng, 4)
    h *= 50.0 / np.linalg.norm(h, 2)
    w, v = np.linalg.eigh(h)
    exact = (v * np.exp(-1j * w)) @ v.conj().T
    got = matrix_exp(-1j * h)
    assert np.linalg.norm(got - exact) <= 1e-12 * np.linalg.norm(exact)


def test_matrix_exp_overflow():
    with pytest.raises(NumericalError):
        matrix_exp(np.diag([1e6, 0.0]))


def test_project_rank1_idempotent():
    rng = np.random.default_rng(3)
    pi = projector(random_pure(rng, 4))
    assert np.allclose(project_rank1(pi), pi, atol=1e-12)


def test_project_rank1_dominant_axis():
    out = project_rank1(np.diag([0.99, 0.01]).astype(complex))
    assert np.allclose(out, np.diag([1.0, 0.0]), atol=1e-14)


def test_project_rank1_scale_invariant():
    rng = np.random.default_rng(11)
    pi = projector(random_pure(rng, 3))
    for c in (0.6, 3.0, 1e-4):
        assert np.allclose(project_rank1(c * pi), pi, atol=1e-10)


def test_project_rank1_degenerate_top():
    with pytest.raises(DegenerateRetractionError):
        project_rank1(0.5 * np.eye(2, dtype=complex))
