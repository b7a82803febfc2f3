"""Classification via clustering.

Gallery and probe are co-clustered; each class is summarized by its
distribution over the clusters and the probe takes the label of the
nearest class distribution.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NoOverlapError, ParameterError
from .proximity import ProximityConfig, build_proximity
from .shc import ClusterAssignment, LabeledDataset, cluster

DISTANCES = ("bhattacharyya", "hellinger")


@dataclass(frozen=True)
class ClassClusterHistogram:
    """Counts of (class, cluster) co-occurrence, rows 1..n_c then the probe row.

    ``distributions`` holds the row-normalized counts; rows with no points
    stay all-zero and are listed in ``empty_rows`` (0-based).
    """

    counts: np.ndarray
    distributions: np.ndarray
    empty_rows: tuple

    @property
    def probe(self):
        return self.distributions[-1]


@dataclass(frozen=True)
class ClassificationResult:
    predicted_label: int
    distances: np.ndarray
    snr: float
    assignment: ClusterAssignment | None = None
    histogram: ClassClusterHistogram | None = None


def build_histogram(class_labels, cluster_labels, n_rows, n_clusters):
    """Histogram with ``n_rows`` label rows (gallery classes plus probe)."""
    cls = np.asarray(class_labels, dtype=int)
    clu = np.asarray(cluster_labels, dtype=int)
    if cls.shape != clu.shape or cls.ndim != 1:
        raise DimensionError("class and cluster label vectors must have equal length")
    if cls.size and (cls.min() < 1 or cls.max() > n_rows):
        raise ParameterError(f"class labels outside 1..{n_rows}")
    if clu.size and (clu.min() < 1 or clu.max() > n_clusters):
        raise ParameterError(f"cluster labels outside 1..{n_clusters}")
    H = np.zeros((n_rows, n_clusters), dtype=int)
    np.add.at(H, (cls - 1, clu - 1), 1)
    totals = H.sum(axis=1)
    P = np.zeros(H.shape)
    nz = totals > 0
    P[nz] = H[nz] / totals[nz, None]
    return ClassClusterHistogram(H, P, tuple(np.flatnonzero(~nz).tolist()))


def bhattacharyya(p, q):
    p, q = np.asarray(p, float), np.asarray(q, float)
    if np.array_equal(p, q):
        # rows that sum to 1 - eps would otherwise give a tiny positive value
        return 0.0
    bc = float(np.sum(np.sqrt(p * q)))
    if bc <= 0.0:
        return np.inf
    return max(0.0, -np.log(bc))


def hellinger(p, q):
    d = np.sqrt(np.asarray(p, float)) - np.sqrt(np.asarray(q, float))
    return float(np.sqrt(np.sum(d * d)) / np.sqrt(2.0))


def class_distances(hist, distance="bhattacharyya"):
    """Distance from the probe row to every gallery row; empty rows get +inf."""
    if distance not in DISTANCES:
        raise ParameterError(f"unknown distance {distance!r}")
    fn = bhattacharyya if distance == "bhattacharyya" else hellinger
    P = hist.distributions
    out = np.array([fn(P[i], P[-1]) for i in range(P.shape[0] - 1)])
    for i in hist.empty_rows:
        if i < P.shape[0] - 1:
            out[i] = np.inf
    return out


def decide(distances):
    """Return ``(label, snr)``: 1-based argmin (lowest index wins ties) and
    the rank-2 to rank-1 distance ratio."""
    d = np.asarray(distances, dtype=float)
    if d.size == 0 or not np.isfinite(d).any():
        raise NoOverlapError("the probe shares no cluster with any gallery class")
    order = np.argsort(d, kind="stable")
    best = d[order[0]]
    if d.size < 2:
        return int(order[0]) + 1, np.inf
    second = d[order[1]]
    if second == best:
        snr = 1.0
    elif best == 0.0:
        snr = np.inf
    else:
        snr = float(second / best)
    return int(order[0]) + 1, snr


def classify_dataset(dataset, proximity_config=None, dfvc_params=None,
                     distance="bhattacharyya", affinity=None):
    """Run the pipeline on an assembled dataset (probe label ``n_c + 1``).

    ``affinity`` may supply a precomputed proximity matrix.
    """
    if dataset.n_classes < 2:
        raise ParameterError("classification needs at least 2 gallery classes")
    if not dataset.probe_mask.any():
        raise ParameterError("probe set is empty")
    A = build_proximity(dataset.data, proximity_config) if affinity is None else affinity
    # identical points are indistinguishable, so they always share a cluster
    _, groups = np.unique(dataset.data, axis=1, return_inverse=True)
    assignment = cluster(A, dataset.labels, dataset.probe_label, dfvc_params, groups.ravel())
    hist = build_histogram(dataset.labels, assignment.labels, dataset.n_classes + 1,
                           assignment.n_clusters)
    dist = class_distances(hist, distance)
    label, snr = decide(dist)
    return ClassificationResult(label, dist, snr, assignment, hist)


def classify(gallery, gallery_labels, probe, proximity_config=None, dfvc_params=None,
             distance="bhattacharyya"):
    """Label a probe set against a labeled gallery.

    ``gallery`` is l x n_g and ``probe`` l x n_p, one point per column;
    gallery labels run 1..n_c.
    """
    dataset = LabeledDataset.from_sets(gallery, gallery_labels, probe)
    return classify_dataset(dataset, proximity_config or ProximityConfig(), dfvc_params,
                            distance)
