"""Dense linear-algebra kernel.

Householder QR and back-substitution are written out here because the
Fiedler solver is built directly on them. ``symmetric_eig`` is the
independent oracle used to check that solver and is delegated to LAPACK.
"""

import numba
import numpy as np

from .errors import DimensionError, SingularSystemError, SymmetryError

PIVOT_FLOOR = 1e-12
SYMMETRY_TOL = 1e-9


def as_matrix(M, name="matrix"):
    """Validate a finite, non-empty 2-D array and return it as float64."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or Inf")
    return A


def as_vector(v, name="vector"):
    x = np.asarray(v, dtype=float)
    if x.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains NaN or Inf")
    return x


def _require_square(A, name):
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got {A.shape[0]}x{A.shape[1]}")


def qr_decompose(M):
    """QR factorization of a square matrix by Householder reflections.

    Returns ``(Q, R)`` with orthonormal ``Q`` and upper-triangular ``R``
    whose diagonal is made nonnegative, so the factorization is unique for
    nonsingular input (the identity factors as ``(I, I)``).
    """
    A = as_matrix(M)
    _require_square(A, "matrix")
    n = A.shape[0]
    R = A.copy()
    Q = np.eye(n)
    for k in range(n - 1):
        x = R[k:, k]
        tail = np.linalg.norm(x[1:])
        if tail == 0.0:
            continue
        normx = np.hypot(x[0], tail)
        alpha = -np.copysign(normx, x[0])
        v = x.copy()
        v[0] -= alpha
        v /= np.linalg.norm(v)
        R[k:, k:] -= 2.0 * np.outer(v, v @ R[k:, k:])
        Q[:, k:] -= 2.0 * np.outer(Q[:, k:] @ v, v)
        R[k + 1:, k] = 0.0
    signs = np.where(np.diag(R) < 0.0, -1.0, 1.0)
    return Q * signs, R * signs[:, None]


def back_substitute(R, b):
    """Solve ``R x = b`` for upper-triangular ``R``.

    Raises SingularSystemError when a pivot falls below
    ``PIVOT_FLOOR * max|R(i,i)|``.
    """
    R = as_matrix(R, "R")
    _require_square(R, "R")
    b = as_vector(b, "b")
    n = R.shape[0]
    if b.shape[0] != n:
        raise DimensionError(f"b has length {b.shape[0]}, expected {n}")
    scale = np.max(np.abs(R)) if R.size else 0.0
    if np.any(np.abs(np.tril(R, -1)) > 1e-14 * max(scale, 1.0)):
        raise DimensionError("R is not upper triangular")
    check_pivots(R)
    return _back_substitute(np.ascontiguousarray(R), np.ascontiguousarray(b))


def check_pivots(R):
    """Raise SingularSystemError if any diagonal entry of ``R`` is below the floor."""
    diag = np.abs(np.diag(R))
    floor = PIVOT_FLOOR * diag.max()
    bad = np.flatnonzero(diag <= floor)
    if bad.size:
        i = bad[0]
        raise SingularSystemError(
            f"pivot R({i},{i}) = {R[i, i]:.3e} below floor {floor:.3e}")


@numba.njit(cache=True)
def _back_substitute(R, b):
    # no validation: callers have already run check_pivots on R
    n = R.shape[0]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        acc = b[i]
        for j in range(i + 1, n):
            acc -= R[i, j] * x[j]
        x[i] = acc / R[i, i]
    return x


def qr_solve(Q, R, b):
    """Solve ``Q R x = b`` given a QR factorization."""
    return back_substitute(R, np.asarray(Q).T @ as_vector(b, "b"))


def symmetric_eig(M):
    """Eigen-decomposition of a symmetric matrix, eigenvalues ascending.

    Eigenvectors are the columns of the returned matrix.
    """
    A = as_matrix(M)
    _require_square(A, "matrix")
    asym = np.max(np.abs(A - A.T))
    if asym > SYMMETRY_TOL:
        raise SymmetryError(f"matrix is not symmetric (max |M - M^T| = {asym:.3e})")
    A = 0.5 * (A + A.T)
    w, V = np.linalg.eigh(A)
    return w, V


def pinv_symmetric(M, cutoff=1e-10):
    """Pseudo-inverse of a symmetric PSD matrix by truncated eigen-decomposition.

    Eigenpairs with eigenvalue ``<= cutoff * max eigenvalue`` are dropped.
    Returns ``(pinv, rank)``.
    """
    w, V = symmetric_eig(M)
    top = w.max() if w.size else 0.0
    keep = w > cutoff * top if top > 0 else np.zeros_like(w, dtype=bool)
    Vk = V[:, keep]
    return (Vk / w[keep]) @ Vk.T, int(keep.sum())
