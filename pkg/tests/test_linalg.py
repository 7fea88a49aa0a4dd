import math

import numpy as np
import pytest

from scenred import linalg
from scenred.errors import DimensionMismatch, NoConvergence, NonSymmetric, NotPositiveDefinite

from oracles import random_spd


def test_identity_eigenvalues():
    lam, V = linalg.sym_eigen(np.eye(3))
    assert lam.tolist() == [1.0, 1.0, 1.0]
    assert np.allclose(V @ V.T, np.eye(3))


def test_diagonal_eigenvectors_are_axes():
    lam, V = linalg.sym_eigen(np.diag([5.0, 2.0]))
    assert lam.tolist() == [2.0, 5.0]
    assert np.allclose(np.abs(V), [[0, 1], [1, 0]])


def test_two_by_two_characteristic_polynomial():
    lam = linalg.eigvals([[2.0, 1.0], [1.0, 2.0]])
    assert lam == pytest.approx([1.0, 3.0], abs=1e-14)


def test_nonsymmetric_rejected():
    with pytest.raises(NonSymmetric):
        linalg.sym_eigen([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(DimensionMismatch):
        linalg.sym_eigen(np.ones((2, 3)))


def test_sweep_cap():
    A = np.array([[1.0, 0.5], [0.5, 2.0]])
    with pytest.raises(NoConvergence):
        linalg.sym_eigen(A, max_sweeps=0)


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_reconstruction_against_lapack(n):
    rng = np.random.default_rng(n)
    for _ in range(10):
        B = rng.standard_normal((n, n))
        A = B + B.T
        lam, V = linalg.sym_eigen(A)
        assert np.allclose(V @ np.diag(lam) @ V.T, A, atol=1e-12 * max(1, np.linalg.norm(A)))
        assert np.allclose(V.T @ V, np.eye(n), atol=1e-12)
        assert np.allclose(lam, np.linalg.eigvalsh(A), atol=1e-12 * max(1, np.linalg.norm(A)))
        assert lam.sum() == pytest.approx(np.trace(A), abs=1e-10)


def test_tiny_offdiagonal_after_rotation_converges():
    # sample covariances of nearly collinear assets used to stall the sweep
    rng = np.random.default_rng(1)
    X = rng.standard_normal((50, 5)) @ rng.uniform(0.1, 0.2, (5, 5))
    A = np.cov(X, rowvar=False)
    lam = linalg.eigvals(A)
    assert np.allclose(lam, np.linalg.eigvalsh(A), atol=1e-15)


def test_cholesky_examples():
    assert np.array_equal(linalg.cholesky(np.eye(3)), np.eye(3))
    assert np.allclose(linalg.cholesky(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    L = linalg.cholesky([[2.0, 1.0], [1.0, 2.0]])
    assert L[0, 0] == pytest.approx(math.sqrt(2))
    assert L[0, 1] == 0.0
    assert np.allclose(L @ L.T, [[2, 1], [1, 2]])


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        linalg.cholesky([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NotPositiveDefinite):
        linalg.cholesky(np.zeros((2, 2)))


def test_solve_spd_examples():
    assert np.allclose(linalg.solve_spd(np.eye(3), [1.0, 2.0, 3.0]), [1, 2, 3])
    assert np.allclose(linalg.solve_spd(np.diag([2.0, 4.0]), [2.0, 4.0]), [1, 1])
    assert np.allclose(linalg.solve_spd([[2.0, 1.0], [1.0, 2.0]], [3.0, 3.0]), [1, 1])
    with pytest.raises(DimensionMismatch):
        linalg.solve_spd(np.eye(2), [1.0, 2.0, 3.0])


def test_logdet_matches_numpy():
    rng = np.random.default_rng(3)
    A = random_spd(rng, 4, cond=50)
    assert linalg.logdet_spd(A) == pytest.approx(np.linalg.slogdet(A)[1], abs=1e-12)
