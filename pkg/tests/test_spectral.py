import numpy as np
import pytest

from gsinterp.errors import NumericalError
from gsinterp.spectral import EigenDecomposition, as_symmetric, matvec, sym_eigen

from conftest import random_sym
from oracles import charpoly_eigenvalues


def test_identity_eigen():
    d = sym_eigen(np.eye(2))
    np.testing.assert_allclose(d.eigenvalues, [1.0, 1.0])
    np.testing.assert_allclose(d.eigenvectors.T @ d.eigenvectors, np.eye(2), atol=1e-12)


def test_diagonal_sorted_ascending():
    d = sym_eigen(np.diag([2.0, 0.0]))
    np.testing.assert_allclose(d.eigenvalues, [0.0, 2.0])
    # ascending order puts the e2 eigenvector first
    np.testing.assert_allclose(np.abs(d.eigenvectors), [[0, 1], [1, 0]], atol=1e-14)


def test_path4_closed_form_spectrum(path4_basis):
    # 1 - cos(pi k / 3) for k = 0..3
    np.testing.assert_allclose(
        path4_basis.frequencies, [0.0, 0.5, 1.5, 2.0], atol=1e-10
    )


def test_deterministic_and_sign_fixed():
    rng = np.random.default_rng(7)
    a = random_sym(rng, 12)
    d1 = sym_eigen(a)
    d2 = sym_eigen(a.copy())
    np.testing.assert_array_equal(d1.eigenvalues, d2.eigenvalues)
    np.testing.assert_array_equal(d1.eigenvectors, d2.eigenvectors)
    for j in range(12):
        col = d1.eigenvectors[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * np.abs(col).max())
        assert col[nz[0]] > 0


@pytest.mark.parametrize("seed", range(100))
def test_reconstruction_and_orthogonality_corpus(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 51))
    a = random_sym(rng, n)
    d = sym_eigen(a)
    recon = (d.eigenvectors * d.eigenvalues) @ d.eigenvectors.T
    assert np.linalg.norm(recon - a) / np.linalg.norm(a) < 1e-8
    assert np.linalg.norm(d.eigenvectors.T @ d.eigenvectors - np.eye(n)) < 1e-8
    assert np.all(np.diff(d.eigenvalues) >= 0)


@pytest.mark.parametrize("seed", range(40))
@pytest.mark.parametrize("n", [2, 3, 4])
def test_charpoly_oracle_small(seed, n):
    rng = np.random.default_rng(1000 + seed)
    a = random_sym(rng, n)
    np.testing.assert_allclose(
        sym_eigen(a).eigenvalues, charpoly_eigenvalues(a), atol=1e-8
    )


def test_degenerate_eigenspace_projector():
    # eigenvalues {1, 1, 3}: individual vectors of the double eigenvalue are
    # basis-dependent, the projector onto the eigenspace is not.
    q = sym_eigen(random_sym(np.random.default_rng(3), 3)).eigenvectors
    a = q @ np.diag([1.0, 1.0, 3.0]) @ q.T
    d = sym_eigen(a)
    np.testing.assert_allclose(d.eigenvalues, [1.0, 1.0, 3.0], atol=1e-10)
    p_hat = d.eigenvectors[:, :2] @ d.eigenvectors[:, :2].T
    p_true = q[:, :2] @ q[:, :2].T
    np.testing.assert_allclose(p_hat, p_true, atol=1e-10)


def test_input_validation():
    with pytest.raises(ValueError):
        sym_eigen(np.array([[1.0, 2.0], [3.0, 4.0]]))  # not symmetric
    with pytest.raises(ValueError):
        sym_eigen(np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        sym_eigen(np.zeros((2, 3)))
    assert isinstance(NumericalError("x"), RuntimeError)


def test_as_symmetric_tolerates_rounding():
    a = np.array([[1.0, 0.5 + 1e-15], [0.5, 2.0]])
    out = as_symmetric(a)
    np.testing.assert_array_equal(out, out.T)


def test_matvec():
    v = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(matvec(np.eye(3), v), v)
    np.testing.assert_array_equal(matvec(np.zeros((3, 3)), v), np.zeros(3))
    np.testing.assert_array_equal(
        matvec(np.ones((3, 3)), np.ones(3)), np.array([3.0, 3.0, 3.0])
    )
    with pytest.raises(ValueError):
        matvec(np.eye(3), np.ones(4))


def test_eigendecomposition_n():
    d = sym_eigen(np.eye(5))
    assert isinstance(d, EigenDecomposition)
    assert d.n == 5
