"""Semi-supervised hierarchical clustering.

Clusters are split two ways by the sign of their Fiedler vector. Labels
never influence where a cut falls; they only decide whether a cluster
still needs cutting.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .dfvc import DfvcParams, compute_fiedler, sign_partition
from .errors import DimensionError, NumericalError, ParameterError
from .graph import _check_adjacency, build_spectra, is_connected
from .linalg import as_matrix


@dataclass(frozen=True)
class LabeledDataset:
    """Gallery columns followed by probe columns.

    Gallery labels are 1..n_classes; probe columns carry ``n_classes + 1``.
    """

    data: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        if labels.ndim != 1 or labels.shape[0] != np.asarray(self.data).shape[1]:
            raise DimensionError("need one label per data column")
        present = set(np.unique(labels).tolist())
        missing = set(range(1, self.n_classes + 1)) - present
        if missing:
            raise ParameterError(f"gallery classes without points: {sorted(missing)}")
        if present - set(range(1, self.n_classes + 2)):
            raise ParameterError(f"labels outside 1..{self.n_classes + 1}")
        object.__setattr__(self, "labels", labels)

    @property
    def probe_label(self):
        return self.n_classes + 1

    @property
    def probe_mask(self):
        return self.labels == self.probe_label

    @classmethod
    def from_sets(cls, gallery, gallery_labels, probe):
        G = as_matrix(gallery, "gallery")
        P = as_matrix(probe, "probe")
        if G.shape[0] != P.shape[0]:
            raise DimensionError(
                f"gallery has {G.shape[0]} features per point, probe has {P.shape[0]}")
        gl = np.asarray(gallery_labels, dtype=int)
        n_c = int(gl.max())
        labels = np.concatenate([gl, np.full(P.shape[1], n_c + 1)])
        return cls(np.hstack([G, P]), labels, n_c)


@dataclass(frozen=True)
class SplitRecord:
    parent: int
    children: tuple
    level: int
    method: str  # "fiedler" or "components"
    fiedler_value: float | None = None
    delta_s: int | None = None
    iterations: int | None = None
    converged: bool | None = None


@dataclass
class ClusterAssignment:
    labels: np.ndarray
    n_clusters: int
    tree_trace: list = field(default_factory=list)
    unsplittable: list = field(default_factory=list)

    def sizes(self):
        return np.bincount(self.labels, minlength=self.n_clusters + 1)[1:]


def is_indivisible(class_labels, probe_label):
    """True unless the cluster holds probe points and two or more gallery classes."""
    present = set(np.asarray(class_labels).ravel().tolist())
    if not present:
        raise ParameterError("empty cluster")
    has_probe = probe_label in present
    return not (has_probe and len(present - {probe_label}) >= 2)


def cluster(A, labels, probe_label, dfvc_params=None, groups=None):
    """Hierarchical two-way NCut on ``A`` until every cluster is indivisible.

    ``A`` is the global proximity matrix; each cluster is cut using its
    own submatrix. Clusters that are divisible but cannot be cut (all
    Fiedler coefficients on one side, or a solver failure) are kept and
    listed in ``unsplittable``.

    ``groups`` optionally marks interchangeable points (equal values, e.g.
    identical feature vectors). A group is never split: it goes to the
    side given by the sign of its mean Fiedler coefficient.
    """
    A = _check_adjacency(A)
    labels = np.asarray(labels, dtype=int)
    n = A.shape[0]
    if labels.shape != (n,):
        raise DimensionError(f"expected {n} labels, got {labels.shape}")
    params = dfvc_params or DfvcParams()
    if groups is not None:
        groups = np.asarray(groups)
        if groups.shape != (n,):
            raise DimensionError(f"expected {n} group ids, got {groups.shape}")

    leaf_of = np.zeros(n, dtype=int)
    leaves = []
    unsplittable = []
    trace = []
    next_id = 1
    stack = [(np.arange(n), 1, 1)]  # (indices, node id, level)
    while stack:
        idx, node, level = stack.pop()
        # a divisible cluster holds the probe and two classes, so has >= 3 points
        if is_indivisible(labels[idx], probe_label):
            leaves.append(idx)
            continue
        parts, record = _split(A[np.ix_(idx, idx)], params,
                               None if groups is None else groups[idx])
        if parts is None:
            unsplittable.append(len(leaves))
            leaves.append(idx)
            continue
        parts = [idx[p] for p in parts]
        child_ids = tuple(range(next_id + 1, next_id + 1 + len(parts)))
        next_id += len(parts)
        trace.append(SplitRecord(parent=node, children=child_ids, level=level, **record))
        for part, cid in reversed(list(zip(parts, child_ids))):
            stack.append((part, cid, level + 1))

    for k, idx in enumerate(leaves, start=1):
        leaf_of[idx] = k
    return ClusterAssignment(labels=leaf_of, n_clusters=len(leaves), tree_trace=trace,
                             unsplittable=[k + 1 for k in unsplittable])


def _split(Ac, params, groups=None):
    """Cut one cluster. Returns ``(parts, record)`` or ``(None, None)``."""
    connected, comp = is_connected(Ac)
    if not connected:
        if groups is not None:
            merged = _merge_components(comp, groups)
            if merged.max() > 1:
                comp = merged
        parts = [np.flatnonzero(comp == c) for c in range(1, comp.max() + 1)]
        return parts, dict(method="components", fiedler_value=0.0)
    try:
        result = compute_fiedler(build_spectra(Ac), params)
    except NumericalError:
        return None, None
    u = result.vector
    if groups is not None:
        _, inv = np.unique(groups, return_inverse=True)
        inv = inv.ravel()
        u = (np.bincount(inv, weights=u) / np.bincount(inv))[inv]
    right, degenerate = sign_partition(u)
    if degenerate:
        return None, None
    record = dict(method="fiedler", fiedler_value=result.value,
                  delta_s=result.sign_switch_history[-1], iterations=result.iterations,
                  converged=result.converged)
    return [np.flatnonzero(~right), np.flatnonzero(right)], record


def _merge_components(comp, groups):
    # components sharing a group are joined
    k = int(comp.max())
    link = np.zeros((k, k), dtype=bool)
    first = {}
    for c, g in zip(comp.tolist(), groups.tolist()):
        link[first.setdefault(g, c) - 1, c - 1] = True
    _, merged = connected_components(link, directed=False)
    # renumber in order of first appearance to keep component order stable
    order = {}
    for m in merged[comp - 1].tolist():
        order.setdefault(m, len(order) + 1)
    return np.array([order[m] for m in merged[comp - 1].tolist()])


def verify_conditional_orthogonality(cluster_labels, class_labels, n_classes):
    """Check that no cluster carries mass from two gallery classes and the probe."""
    cluster_labels = np.asarray(cluster_labels, dtype=int)
    class_labels = np.asarray(class_labels, dtype=int)
    n_k = int(cluster_labels.max())
    H = np.zeros((n_classes + 1, n_k))
    np.add.at(H, (class_labels - 1, cluster_labels - 1), 1.0)
    totals = H.sum(axis=1, keepdims=True)
    P = np.divide(H, totals, out=np.zeros_like(H), where=totals > 0)
    joint = P[:n_classes] * P[n_classes]  # p_i[k] * p_p[k]
    inner = joint @ joint.T
    np.fill_diagonal(inner, 0.0)
    return bool(np.all(inner == 0.0))
