"""Dense symmetric linear algebra: cyclic Jacobi eigensolver, Cholesky, SPD solves.

Matrices are plain ``numpy`` float arrays. Every tolerance is taken relative to
``max(1, ||A||_F)`` so that the checks behave the same for tiny and huge
scenario magnitudes.
"""
import math

import numpy as np

from .errors import DimensionMismatch, NoConvergence, NonSymmetric, NotPositiveDefinite

SYMMETRY_RTOL = 1e-10
MAX_SWEEPS = 100


def scale_of(A):
    return max(1.0, float(np.linalg.norm(A)))


def as_square(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    return A


def is_symmetric(A, rtol=SYMMETRY_RTOL):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    return bool(np.all(np.abs(A - A.T) <= rtol * scale_of(A)))


def check_symmetric(A, rtol=SYMMETRY_RTOL):
    A = as_square(A)
    if not is_symmetric(A, rtol):
        i, j = np.unravel_index(np.argmax(np.abs(A - A.T)), A.shape)
        raise NonSymmetric(
            f"matrix is not symmetric: A[{i}][{j}]={A[i, j]!r} vs A[{j}][{i}]={A[j, i]!r}"
        )
    return A


def _off_norm(A):
    off = A - np.diag(np.diag(A))
    return float(np.linalg.norm(off))


def sym_eigen(A, max_sweeps=MAX_SWEEPS):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, V)`` with eigenvalues ascending and the columns of
    ``V`` the matching orthonormal eigenvectors, so ``A @ V == V * eigenvalues``.
    Raises NonSymmetric or NoConvergence.
    """
    A = check_symmetric(A)
    n = A.shape[0]
    # symmetrize exactly so rotations act on a truly symmetric matrix
    work = 0.5 * (A + A.T)
    V = np.eye(n)
    target = 1e-15 * scale_of(A)

    sweep = 0
    while _off_norm(work) > target:
        if sweep >= max_sweeps:
            raise NoConvergence(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                if apq == 0.0:
                    continue
                tau = (work[q, q] - work[p, p]) / (2.0 * apq)
                if abs(tau) > 1e150:
                    # tau * tau would overflow; the small-angle limit is exact to rounding
                    t = 0.5 / tau
                elif tau >= 0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c

                col_p = work[:, p].copy()
                col_q = work[:, q].copy()
                work[:, p] = c * col_p - s * col_q
                work[:, q] = s * col_p + c * col_q
                row_p = work[p, :].copy()
                row_q = work[q, :].copy()
                work[p, :] = c * row_p - s * row_q
                work[q, :] = s * row_p + c * row_q
                work[p, q] = work[q, p] = 0.0

                v_p = V[:, p].copy()
                v_q = V[:, q].copy()
                V[:, p] = c * v_p - s * v_q
                V[:, q] = s * v_p + c * v_q

    eigenvalues = np.diag(work).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return eigenvalues[order], V[:, order]


def eigvals(A):
    return sym_eigen(A)[0]


def extreme_eigenvalues(A):
    """Return ``(lambda_min, lambda_max)`` of a symmetric matrix."""
    lam = eigvals(A)
    return float(lam[0]), float(lam[-1])


def cholesky(A):
    """Lower-triangular ``L`` with ``L @ L.T == A`` for symmetric positive definite ``A``."""
    A = check_symmetric(A)
    n = A.shape[0]
    tol = 1e-14 * scale_of(A)
    L = np.zeros_like(A)
    for j in range(n):
        pivot = A[j, j] - L[j, :j] @ L[j, :j]
        if pivot <= tol:
            raise NotPositiveDefinite(f"pivot {j} is {pivot!r}; matrix is not positive definite")
        L[j, j] = math.sqrt(pivot)
        if j + 1 < n:
            L[j + 1:, j] = (A[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def cholesky_solve(L, b):
    """Solve ``L L^T x = b`` given the Cholesky factor."""
    b = np.asarray(b, dtype=float)
    n = L.shape[0]
    if b.shape[0] != n:
        raise DimensionMismatch(f"right-hand side has length {b.shape[0]}, expected {n}")
    y = np.zeros_like(b)
    for i in range(n):
        y[i] = (b[i] - L[i, :i] @ y[:i]) / L[i, i]
    x = np.zeros_like(b)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - L[i + 1:, i] @ x[i + 1:]) / L[i, i]
    return x


def solve_spd(A, b):
    return cholesky_solve(cholesky(A), b)


def logdet_spd(A):
    L = cholesky(A)
    return 2.0 * float(np.sum(np.log(np.diag(L))))
