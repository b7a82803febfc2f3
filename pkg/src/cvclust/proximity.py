"""Subspace-aware proximity matrices from regularized self-representation.

Every point is coded against the remaining points (least squares, lasso
or orthogonal matching pursuit); the codes form the columns of ``S`` and
the affinity is ``|S| + |S^T|``.
"""

from dataclasses import dataclass

import numba
import numpy as np

from .errors import DegenerateDictionaryError, DimensionError, NumericalError, ParameterError
from .graph import gaussian_adjacency
from .linalg import as_matrix, as_vector, symmetric_eig

METHODS = ("gaussian", "least_squares", "lasso", "fixed_sparsity")
_ALIASES = {"ls": "least_squares", "omp": "fixed_sparsity"}


@dataclass(frozen=True)
class ProximityConfig:
    """``w`` is the lasso weight, or the atom budget for fixed_sparsity.

    ``kernel_sigma`` only applies to the gaussian method (None selects the
    median-distance heuristic).
    """

    method: str = "lasso"
    w: float = 0.01
    singular_value_cutoff: float = 1e-10
    kernel_sigma: float | None = None
    tol: float = 1e-6
    max_sweeps: int = 1000

    def __post_init__(self):
        method = _ALIASES.get(self.method, self.method)
        if method not in METHODS:
            raise ParameterError(f"unknown proximity method {self.method!r}")
        object.__setattr__(self, "method", method)
        if not self.w >= 0:
            raise ParameterError(f"w must be >= 0, got {self.w}")
        if method == "fixed_sparsity" and (self.w < 1 or self.w != int(self.w)):
            raise ParameterError(f"fixed_sparsity budget must be a positive integer, got {self.w}")


def _check_dictionary(x, D):
    x = as_vector(x, "x")
    D = as_matrix(D, "dictionary")
    if D.shape[0] != x.shape[0]:
        raise DimensionError(f"x has length {x.shape[0]}, dictionary has {D.shape[0]} rows")
    return x, D


def least_squares_code(x, dictionary, cutoff=1e-10):
    """Minimum-norm least-squares code through a truncated eigen-decomposition
    of the Gram matrix."""
    x, D = _check_dictionary(x, dictionary)
    w, U = symmetric_eig(D.T @ D)
    top = w.max()
    keep = w > cutoff * top if top > 0 else np.zeros_like(w, dtype=bool)
    if not keep.any():
        raise DegenerateDictionaryError("every eigenvalue of the Gram matrix is below the cutoff")
    Uk = U[:, keep]
    return Uk @ ((Uk.T @ (D.T @ x)) / w[keep])


@numba.njit(cache=True)
def _lasso_cd(G, c, w, tol, max_sweeps, skip):
    """Cyclic coordinate descent on ``0.5 a^T G a - c^T a + w |a|_1``.

    Coordinate ``skip`` is held at zero (-1 disables). Returns the code and
    the number of sweeps.
    """
    m = c.shape[0]
    a = np.zeros(m)
    grad = c.copy()  # c - G a, kept current
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(m):
            if j == skip or G[j, j] <= 0.0:
                continue
            rho = grad[j] + G[j, j] * a[j]
            if rho > w:
                new = (rho - w) / G[j, j]
            elif rho < -w:
                new = (rho + w) / G[j, j]
            else:
                new = 0.0
            delta = new - a[j]
            if delta != 0.0:
                for k in range(m):
                    grad[k] -= G[k, j] * delta
                a[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if max_delta < tol:
            break
    return a, sweeps


def lasso_code(x, dictionary, w=0.01, tol=1e-6, max_sweeps=1000):
    """Minimize ``0.5 ||x - D a||^2 + w ||a||_1`` by coordinate descent."""
    x, D = _check_dictionary(x, dictionary)
    if w < 0:
        raise ParameterError(f"w must be >= 0, got {w}")
    if w == 0:
        return least_squares_code(x, D)
    a, _ = _lasso_cd(D.T @ D, D.T @ x, float(w), float(tol), int(max_sweeps), -1)
    return a


def fixed_sparsity_code(x, dictionary, budget):
    """Orthogonal matching pursuit with at most ``budget`` atoms.

    Atoms are chosen by normalized correlation with the residual; the code
    is refit by least squares on the support after every addition.
    """
    x, D = _check_dictionary(x, dictionary)
    m = D.shape[1]
    if int(budget) != budget or not 1 <= budget <= m:
        raise ParameterError(f"budget must be an integer in [1, {m}], got {budget}")
    norms = np.linalg.norm(D, axis=0)
    usable = norms > 0
    support = []
    a = np.zeros(m)
    r = x.copy()
    scale = max(np.linalg.norm(x), 1e-300)
    for _ in range(int(budget)):
        if np.linalg.norm(r) <= 1e-14 * scale:
            break
        corr = np.zeros(m)
        corr[usable] = np.abs(D[:, usable].T @ r) / norms[usable]
        corr[support] = -1.0
        j = int(np.argmax(corr))
        if corr[j] <= 1e-14 * scale:
            break
        support.append(j)
        coef, *_ = np.linalg.lstsq(D[:, support], x, rcond=None)
        a[:] = 0.0
        a[support] = coef
        r = x - D[:, support] @ coef
    return a


def _lasso_self_codes(X, config):
    """Lasso codes of every column against the others.

    Identical columns make the lasso solution non-unique: only the summed
    weight on a group of copies is determined. Each group is coded as one
    atom and its weight split evenly over the copies, which is the
    minimum-norm optimum and treats copies symmetrically.
    """
    n = X.shape[1]
    U, group = np.unique(X, axis=1, return_inverse=True)
    group = group.ravel()
    sizes = np.bincount(group)
    G = U.T @ U
    S = np.zeros((n, n))
    for i in range(n):
        g = group[i]
        skip = g if sizes[g] == 1 else -1
        a, _ = _lasso_cd(G, G[:, g].copy(), float(config.w), float(config.tol),
                         int(config.max_sweeps), skip)
        # copies of x_i other than itself share the group weight
        share = sizes[group] - (group == g)
        col = np.zeros(n)
        nz = share > 0
        col[nz] = a[group[nz]] / share[nz]
        col[i] = 0.0
        S[:, i] = col
    return S


def _self_codes(X, config):
    n = X.shape[1]
    S = np.zeros((n, n))
    if config.method == "lasso" and config.w > 0:
        return _lasso_self_codes(X, config)
    for i in range(n):
        others = np.delete(np.arange(n), i)
        Dhat = X[:, others]
        try:
            if config.method == "fixed_sparsity":
                a = fixed_sparsity_code(X[:, i], Dhat, int(config.w))
            else:
                a = least_squares_code(X[:, i], Dhat, config.singular_value_cutoff)
        except NumericalError as exc:
            raise type(exc)(f"point {i}: {exc}") from exc
        except ParameterError as exc:
            raise ParameterError(f"point {i}: {exc}") from exc
        S[others, i] = a
    return S


def build_proximity(data, config=None):
    """Affinity matrix over the columns of ``data`` (l x n)."""
    config = config or ProximityConfig()
    X = as_matrix(data, "data")
    n = X.shape[1]
    if config.method == "gaussian":
        return gaussian_adjacency(X, config.kernel_sigma)
    if n < 3:
        raise DimensionError("self-representation proximity needs at least 3 points")
    if config.method == "fixed_sparsity" and config.w >= n - 1:
        raise ParameterError(f"fixed_sparsity budget must be < n-1 = {n - 1}")
    S = _self_codes(X, config)
    A = np.abs(S) + np.abs(S.T)
    np.fill_diagonal(A, 0.0)
    return A
