"""Direct Fiedler vector computation.

Shifted inverse iteration on the over-deflated Laplacian
``L_s - u_n 1^T - eta I``. The shifted matrix is QR-factored once; every
iteration is one back-substitution. Iteration stops on sign stability:
when fewer than ``epsilon_s`` coefficients change sign between steps.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShiftCollisionError, SingularSystemError
from .linalg import _back_substitute, check_pivots, qr_decompose

ETA_FLOOR = 1e-8
MAX_RESTARTS = 5


@dataclass(frozen=True)
class DfvcParams:
    """Solver settings. ``None`` selects the graph-dependent default.

    ``normalize_null`` uses the unit null vector in the over-deflation term
    instead of the raw ``sqrt(degree)``. ``orthogonalize`` removes the
    null-vector component from every iterate; without it the iteration
    converges to an eigenvector of the deflated matrix, which still
    carries a null-vector component.
    """

    eta: float | None = None
    epsilon_s: int | None = None
    max_iterations: int = 1000
    patience: int = 20
    normalize_null: bool = False
    orthogonalize: bool = True

    def __post_init__(self):
        if self.eta is not None and not self.eta > 0:
            raise ParameterError(f"eta must be positive, got {self.eta}")
        if self.epsilon_s is not None and self.epsilon_s < 0:
            raise ParameterError(f"epsilon_s must be >= 0, got {self.epsilon_s}")
        if self.patience < 1:
            raise ParameterError("patience must be >= 1")
        if self.max_iterations < 1:
            raise ParameterError("max_iterations must be >= 1")


@dataclass(frozen=True)
class FiedlerResult:
    vector: np.ndarray
    value: float
    iterations: int
    converged: bool
    eta: float
    restarts: int = 0
    sign_switch_history: list = field(default_factory=list)
    per_point_switch_counts: np.ndarray | None = None

    @property
    def total_switches(self):
        return int(sum(self.sign_switch_history))


def default_epsilon(n):
    """Sign-change threshold: 1% of the points, at least one."""
    return max(1, math.ceil(0.01 * n))


def eta_from_volume(volume):
    return max(1.0 / volume ** 2, ETA_FLOOR)


def estimate_eta(spectra):
    """Shift from the loose bound ``lambda_{n-1} >= 1 / v_g**2``.

    The volume is measured in units of the heaviest edge. The normalized
    Laplacian does not change when all weights are scaled, so the shift
    must not either.
    """
    w_max = float(np.max(spectra.adjacency))
    return eta_from_volume(spectra.volume / w_max)


def sign_partition(u):
    """Split by sign: ``u(i) >= 0`` goes right.

    Returns ``(right, degenerate)``; ``degenerate`` is True when every
    point lands on the same side.
    """
    right = np.asarray(u) >= 0.0
    return right, bool(right.all() or not right.any())


def _start_vector(Q, u, u_hat):
    n = Q.shape[0]
    v = Q[:, : n - 1].sum(axis=1) - u
    v -= u_hat * (u_hat @ v)
    nv = np.linalg.norm(v)
    if nv < 1e-8:
        v = np.cos(np.arange(n) + 0.5)
        v -= u_hat * (u_hat @ v)
        nv = np.linalg.norm(v)
    return v / nv


def compute_fiedler(spectra, params=None):
    """Fiedler vector and algebraic connectivity of a connected graph."""
    params = params or DfvcParams()
    n = spectra.n
    if n < 2:
        raise ParameterError("a Fiedler vector needs at least 2 vertices")
    L = spectra.laplacian
    u = spectra.null_vector
    u_hat = u / np.linalg.norm(u)
    if params.normalize_null:
        u = u_hat
    eps_s = default_epsilon(n) if params.epsilon_s is None else params.epsilon_s
    eta = params.eta if params.eta is not None else estimate_eta(spectra)

    deflated = L - np.outer(u, np.ones(n))
    for restart in range(MAX_RESTARTS + 1):
        Q, R = qr_decompose(deflated - eta * np.eye(n))
        try:
            check_pivots(R)
        except SingularSystemError:
            eta *= 2.0
            continue
        return _iterate(L, Q, R, u, u_hat, eta, eps_s, params, restart)
    raise ShiftCollisionError(
        f"shifted system stayed singular after {MAX_RESTARTS} restarts (eta={eta / 2:.3e})")


def _iterate(L, Q, R, u, u_hat, eta, eps_s, params, restarts):
    n = L.shape[0]
    v = _start_vector(Q, u, u_hat)
    side = v >= 0.0
    counts = np.zeros(n, dtype=int)
    history = []
    converged = False
    stable = 0
    k = 0
    while k < params.max_iterations:
        k += 1
        w = _back_substitute(R, Q.T @ v)
        if params.orthogonalize:
            w -= u_hat * (u_hat @ w)
        v = w / np.linalg.norm(w)
        new_side = v >= 0.0
        flips = new_side != side
        counts += flips
        delta = int(flips.sum())
        history.append(delta)
        side = new_side
        stable = stable + 1 if delta < eps_s else 0
        if stable >= params.patience:
            converged = True
            break
    value = float(v @ L @ v)
    return FiedlerResult(vector=v, value=value, iterations=k, converged=converged,
                         eta=eta, restarts=restarts, sign_switch_history=history,
                         per_point_switch_counts=counts)
