"""Weighted graph construction: Gaussian affinities, normalized Laplacian, NCut."""

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from .errors import DegenerateGraphError, DimensionError, ParameterError, PartitionError
from .linalg import as_matrix

CONNECTIVITY_EPS = 1e-12


@dataclass(frozen=True)
class GraphSpectra:
    """Adjacency, degrees and symmetric normalized Laplacian of a graph.

    ``null_vector`` is ``sqrt(degree)``, unnormalized; it spans the null
    space of ``laplacian`` on a connected graph.
    """

    adjacency: np.ndarray
    degree: np.ndarray
    laplacian: np.ndarray
    volume: float
    null_vector: np.ndarray

    @property
    def n(self):
        return self.adjacency.shape[0]


def median_bandwidth(X):
    """Median pairwise Euclidean distance between the columns of ``X``."""
    X = as_matrix(X, "X")
    if X.shape[1] < 2:
        raise ParameterError("need at least two points for a bandwidth estimate")
    med = float(np.median(pdist(X.T)))
    if med <= 0.0:
        # every pair coincides or most do; any positive scale gives the same graph shape
        med = 1.0
    return med


def gaussian_adjacency(X, sigma=None):
    """Gaussian-kernel adjacency between the columns of ``X`` (l x n).

    ``sigma`` is either a positive scalar (isotropic covariance
    ``sigma**2 * I``), an l x l SPD covariance matrix, or None for the
    median-distance heuristic.
    """
    X = as_matrix(X, "X")
    l, n = X.shape
    if n < 2:
        raise DimensionError("gaussian_adjacency needs at least 2 points")
    if sigma is None:
        sigma = median_bandwidth(X)
    S = np.asarray(sigma, dtype=float)
    if S.ndim == 0:
        if not np.isfinite(S) or S <= 0.0:
            raise ParameterError(f"kernel sigma must be positive, got {float(S)}")
        Y = X / float(S)
    else:
        if S.shape != (l, l):
            raise DimensionError(f"sigma must be {l}x{l}, got {S.shape}")
        if not np.allclose(S, S.T):
            raise ParameterError("sigma must be symmetric")
        try:
            C = np.linalg.cholesky(S)
        except np.linalg.LinAlgError as exc:
            raise ParameterError("sigma is not positive definite") from exc
        if np.min(np.abs(np.diag(C))) <= 1e-12 * np.max(np.abs(np.diag(C))):
            raise ParameterError("sigma is singular")
        Y = np.linalg.solve(C, X)
    d2 = squareform(pdist(Y.T, "sqeuclidean"))
    A = np.exp(-0.5 * d2)
    np.fill_diagonal(A, 0.0)
    return A


def _check_adjacency(A):
    A = as_matrix(A, "adjacency")
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"adjacency must be square, got {A.shape}")
    if np.any(A < 0.0):
        raise ParameterError("adjacency has negative weights")
    scale = max(np.max(A), 1.0)
    if np.max(np.abs(A - A.T)) > 1e-12 * scale:
        raise ParameterError("adjacency is not symmetric")
    if np.any(np.diag(A) != 0.0):
        raise ParameterError("adjacency diagonal must be zero")
    return A


def build_spectra(A):
    A = _check_adjacency(A)
    deg = A.sum(axis=1)
    isolated = np.flatnonzero(deg <= 0.0)
    if isolated.size:
        raise DegenerateGraphError(
            f"isolated vertices (zero degree): {isolated[:10].tolist()}")
    s = 1.0 / np.sqrt(deg)
    L = s[:, None] * (np.diag(deg) - A) * s[None, :]
    L = 0.5 * (L + L.T)
    return GraphSpectra(adjacency=A, degree=deg, laplacian=L,
                        volume=float(deg.sum()), null_vector=np.sqrt(deg))


def is_connected(A, eps=CONNECTIVITY_EPS):
    """Return ``(connected, labels)`` with component labels numbered from 1."""
    A = as_matrix(A, "adjacency")
    if A.shape[0] == 1:
        return True, np.ones(1, dtype=int)
    k, labels = connected_components(A > eps, directed=False)
    return k == 1, labels + 1


def ncut_objective(A, partition):
    """Normalized-cut value of a two-way partition (True marks the right side)."""
    A = as_matrix(A, "adjacency")
    right = np.asarray(partition, dtype=bool)
    if right.shape != (A.shape[0],):
        raise DimensionError("partition length does not match the graph")
    left = ~right
    if not right.any() or not left.any():
        raise PartitionError("both sides of the partition must be nonempty")
    deg = A.sum(axis=1)
    cut = A[np.ix_(right, left)].sum()
    v_r, v_l = deg[right].sum(), deg[left].sum()
    if v_r == 0.0 or v_l == 0.0:
        return np.inf
    return float(cut * (1.0 / v_r + 1.0 / v_l))
