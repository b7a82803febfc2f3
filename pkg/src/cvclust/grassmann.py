"""Compact subspace representations of point sets and ensemble fusion.

Each set is replaced by a learned basis ``B`` (unit-norm columns) such that
every member is reconstructed from ``B`` with an l1-bounded code. Bases of
dimension 1..nu give one classifier each; their decisions are fused.
"""

from dataclasses import dataclass, field

import numba
import numpy as np

from .cvc import classify_dataset, decide
from .errors import CVCError, NoOverlapError, ParameterError
from .linalg import as_matrix, pinv_symmetric
from .proximity import ProximityConfig, _lasso_cd
from .shc import LabeledDataset

FUSIONS = ("sum", "mode", "none")


@dataclass(frozen=True)
class ManifoldBasis:
    basis: np.ndarray
    dimension: int
    source_set_id: int
    seed: int
    final_residual: float
    residual_history: tuple = ()


@dataclass
class ManifoldEnsemble:
    bases: dict  # (set index, dimension) -> ManifoldBasis
    n_sets: int
    nu: int

    def basis(self, set_id, d):
        return self.bases[(set_id, d)]

    def is_complete(self):
        return all((s, d) in self.bases for s in range(self.n_sets) for d in range(1, self.nu + 1))


@numba.njit(cache=True)
def _l1_ball_code(G, c, radius, a_ls):
    """Minimize ``0.5 a^T G a - c^T a`` subject to ``|a|_1 <= radius``.

    ``a_ls`` is the unconstrained minimizer; when it lies outside the ball
    the lasso weight is bisected until the solution sits on the boundary.
    """
    if np.sum(np.abs(a_ls)) <= radius:
        return a_ls
    lo, hi = 0.0, np.max(np.abs(c))
    a = np.zeros(c.shape[0])
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        a, _s = _lasso_cd(G, c, mid, 1e-12, 10000, -1)
        norm1 = np.sum(np.abs(a))
        if abs(norm1 - radius) <= 1e-10 * radius:
            break
        if norm1 > radius:
            lo = mid
        else:
            hi = mid
    if np.sum(np.abs(a)) > radius:
        a, _s = _lasso_cd(G, c, hi, 1e-12, 10000, -1)
    return a


def sparse_codes(X, B, radius):
    """Codes of every column of ``X`` against ``B`` inside the l1 ball."""
    G = B.T @ B
    Ginv, _ = pinv_symmetric(G)
    C = B.T @ X
    A_ls = Ginv @ C
    out = np.empty_like(A_ls)
    for i in range(X.shape[1]):
        out[:, i] = _l1_ball_code(G, np.ascontiguousarray(C[:, i]), float(radius),
                                  np.ascontiguousarray(A_ls[:, i]))
    return out


def _normalize_columns(B, X, codes, rng):
    norms = np.linalg.norm(B, axis=0)
    dead = norms <= 1e-12
    if dead.any():
        # replace unused atoms with the worst-reconstructed points
        err = np.linalg.norm(X - B @ codes, axis=0)
        worst = np.argsort(err)[::-1]
        for j, col in zip(np.flatnonzero(dead), worst):
            v = X[:, col] if np.linalg.norm(X[:, col]) > 0 else rng.standard_normal(X.shape[0])
            B[:, j] = v
        norms = np.linalg.norm(B, axis=0)
    # an orthonormal basis of the same span keeps the planted codes inside
    # the l1 ball; an oblique one can push them out and stall the descent
    Q, R = np.linalg.qr(B / norms)
    return Q * np.where(np.diag(R) < 0.0, -1.0, 1.0)


def learn_basis(X, d, seed=0, max_alternations=50, radius=None, tol=1e-4, set_id=0):
    """Learn an l x d basis for the columns of ``X`` by alternating l1-bounded
    coding (radius ``d`` by default) with a least-squares basis update,
    orthonormalized after each pass.

    An alternation that would increase the residual is discarded and ends
    the loop, so ``residual_history`` never increases.
    """
    X = as_matrix(X, "X")
    l, n = X.shape
    if int(d) != d or not 1 <= d <= min(l, n):
        raise ParameterError(f"dimension d={d} outside 1..{min(l, n)}")
    d = int(d)
    radius = float(d if radius is None else radius)
    rng = np.random.default_rng(seed)
    B = _normalize_columns(rng.standard_normal((l, d)), X, np.zeros((d, n)), rng)
    codes = sparse_codes(X, B, radius)
    history = [float(np.linalg.norm(X - B @ codes))]
    for _ in range(max_alternations):
        Pinv, _ = pinv_symmetric(codes @ codes.T)
        B_new = _normalize_columns(X @ codes.T @ Pinv, X, codes, rng)
        codes_new = sparse_codes(X, B_new, radius)
        res = float(np.linalg.norm(X - B_new @ codes_new))
        if res > history[-1]:
            break
        B, codes = B_new, codes_new
        prev = history[-1]
        history.append(res)
        if prev == 0.0 or (prev - res) <= tol * prev:
            break
    return ManifoldBasis(basis=B, dimension=d, source_set_id=set_id, seed=int(seed),
                         final_residual=history[-1], residual_history=tuple(history))


def derive_seed(master_seed, set_id, d):
    return int(np.random.SeedSequence([int(master_seed), int(set_id), int(d)]).generate_state(1)[0])


def build_ensemble(sets, nu, seed=0, max_alternations=50, radius=None, cache=None):
    """Bases of dimension 1..nu for every set. ``cache`` is an optional
    mapping-like object with ``get(key)``/``put(key, basis)``."""
    if nu < 1:
        raise ParameterError("nu must be >= 1")
    bases = {}
    for s, X in enumerate(sets):
        for d in range(1, nu + 1):
            sub = derive_seed(seed, s, d)
            key = None
            if cache is not None:
                key = cache.key(X, d, sub, radius, max_alternations)
                hit = cache.get(key)
                if hit is not None:
                    bases[(s, d)] = ManifoldBasis(hit, d, s, sub, float("nan"))
                    continue
            try:
                basis = learn_basis(X, d, sub, max_alternations, radius, set_id=s)
            except ParameterError as exc:
                raise ParameterError(f"set {s}, d={d}: {exc}") from exc
            if cache is not None:
                cache.put(key, basis.basis)
            bases[(s, d)] = basis
    return ManifoldEnsemble(bases, len(sets), nu)


@dataclass(frozen=True)
class EnsembleResult:
    predicted_label: int
    fusion: str
    snr: float
    fused_distances: np.ndarray
    per_dimension_labels: list
    per_dimension_distances: list
    per_dimension: list = field(default_factory=list)


def fuse_sum(distance_rows):
    """Sum rule: add the per-dimension distance vectors, take the argmin."""
    totals = np.sum(np.asarray(distance_rows, dtype=float), axis=0)
    label, snr = decide(totals)
    return label, snr, totals


def fuse_mode(distance_rows):
    """Mode rule: majority vote of per-dimension argmin labels.

    Ties go to the tied label with the smallest summed distance, then the
    smallest label.
    """
    rows = np.asarray(distance_rows, dtype=float)
    labels = [decide(r)[0] for r in rows]
    votes = np.bincount(labels, minlength=rows.shape[1] + 1)[1:]
    tied = np.flatnonzero(votes == votes.max())
    totals = rows.sum(axis=0)
    best = tied[np.argmin(totals[tied])]
    return int(best) + 1, labels


def classify_ensemble(ensemble, set_labels, probe_set, fusion="mode", proximity_config=None,
                      dfvc_params=None, distance="bhattacharyya"):
    """Classify one set of the ensemble against the others.

    ``set_labels`` gives a class label (1..n_c) for every gallery set in
    ensemble order; ``probe_set`` is the index of the probe's bases.
    """
    if fusion not in FUSIONS:
        raise ParameterError(f"unknown fusion {fusion!r}")
    if not 0 <= probe_set < ensemble.n_sets:
        raise ParameterError(f"probe set {probe_set} not in ensemble")
    gallery_sets = [s for s in range(ensemble.n_sets) if s != probe_set]
    set_labels = [int(x) for x in set_labels]
    if len(set_labels) != len(gallery_sets):
        raise ParameterError("need one class label per gallery set")
    n_c = max(set_labels)
    proximity_config = proximity_config or ProximityConfig()
    dims = range(1, ensemble.nu + 1) if fusion != "none" else [ensemble.nu]

    per_dim = []
    for d in dims:
        cols, labs = [], []
        for s, lab in zip(gallery_sets, set_labels):
            B = ensemble.basis(s, d).basis
            cols.append(B)
            labs.extend([lab] * B.shape[1])
        Bp = ensemble.basis(probe_set, d).basis
        cols.append(Bp)
        labs.extend([n_c + 1] * Bp.shape[1])
        dataset = LabeledDataset(np.hstack(cols), np.array(labs), n_c)
        try:
            per_dim.append(classify_dataset(dataset, proximity_config, dfvc_params, distance))
        except CVCError as exc:
            if isinstance(exc, ParameterError):
                raise
            per_dim.append(None)

    usable = [r for r in per_dim if r is not None]
    if not usable:
        raise NoOverlapError("no dimension produced a finite class distance")
    rows = [r.distances for r in usable]
    dim_labels = [r.predicted_label if r is not None else None for r in per_dim]
    if fusion == "mode":
        label, _ = fuse_mode(rows)
        fused = np.sum(rows, axis=0)
        _, snr = decide(fused)
    else:
        label, snr, fused = fuse_sum(rows)
    return EnsembleResult(label, fusion, snr, fused, dim_labels, [r.distances if r else None
                                                                   for r in per_dim], per_dim)

