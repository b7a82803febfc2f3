"""Synthetic data and the two-Gaussian algebraic-connectivity experiment."""

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .dfvc import DfvcParams, compute_fiedler, sign_partition
from .errors import NumericalError, ParameterError
from .graph import build_spectra, gaussian_adjacency, is_connected
from .shc import LabeledDataset

SWITCH_BUCKETS = ("0", "1", "2+")


def generate_two_gaussians(d, sigma, n_per_cluster, seed):
    """Two isotropic 3-D Gaussian clusters centred at the origin and at (d, 0, 0).

    Both clusters come from one standard-normal draw, so for a fixed seed
    only the centre separation changes with ``d``.
    """
    if n_per_cluster < 1:
        raise ParameterError("n_per_cluster must be >= 1")
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((3, 2 * n_per_cluster))
    X = sigma * Z
    X[0, n_per_cluster:] += d
    labels = np.repeat([1, 2], n_per_cluster)
    return LabeledDataset(X, labels, 2)


def generate_gallery(n_classes, n_per_class, n_probe, probe_class, separation=6.0, sigma=1.0,
                     seed=0, outlier_fraction=0.0, dim=None):
    """Gaussian gallery plus a probe drawn from ``probe_class``.

    Class centres sit on distinct coordinate axes at equal distance from
    the origin, ``separation`` apart from each other. With
    ``outlier_fraction > 0`` that share of every gallery class is redrawn
    from the other classes while keeping its label.
    """
    if not 1 <= probe_class <= n_classes:
        raise ParameterError(f"probe_class must be in 1..{n_classes}")
    dim = dim or max(3, n_classes)
    if dim < n_classes:
        raise ParameterError("need at least one axis per class")
    rng = np.random.default_rng(seed)
    centres = np.zeros((dim, n_classes))
    centres[np.arange(n_classes), np.arange(n_classes)] = separation / np.sqrt(2.0)

    gallery_labels = np.repeat(np.arange(1, n_classes + 1), n_per_class)
    source = gallery_labels.copy()
    n_out = int(round(outlier_fraction * n_per_class))
    if n_out and n_classes > 1:
        for c in range(1, n_classes + 1):
            pos = np.flatnonzero(gallery_labels == c)
            picked = rng.choice(pos, n_out, replace=False)
            others = [k for k in range(1, n_classes + 1) if k != c]
            source[picked] = rng.choice(others, n_out)
    gallery = centres[:, source - 1] + sigma * rng.standard_normal((dim, source.size))
    probe = centres[:, [probe_class - 1]] + sigma * rng.standard_normal((dim, n_probe))
    return gallery, gallery_labels, probe


@dataclass(frozen=True)
class GaussianExperimentConfig:
    d_values: tuple = (2.0, 3.0, 4.0, 5.0, 6.0, 7.0)
    sigma: float = 2.0
    sizes: tuple = tuple(range(100, 501, 25))
    seeds: int = 20
    master_seed: int = 0
    kernel_sigma: float | None = None
    epsilon_s: int | None = None
    max_iterations: int = 1000
    patience: int = 20

    def __post_init__(self):
        if any(d <= 0 for d in self.d_values):
            raise ParameterError("centre separations must be positive")
        if any(s < 2 for s in self.sizes):
            raise ParameterError("cluster sizes must be >= 2")
        if self.seeds < 1:
            raise ParameterError("need at least one seed")


@dataclass
class ExperimentReport:
    config: dict
    cells: list
    summary: list
    trends: dict
    version: str = __version__
    timings: dict = field(default_factory=dict)

    def to_dict(self, include_timings=True):
        out = asdict(self)
        if not include_timings:
            out.pop("timings")
        return out


def partition_error(right, truth):
    """Misclassification rate under the better of the two label matchings.

    Returns ``(rate, wrong)`` where ``wrong`` flags misassigned points.
    """
    wrong = right != (np.asarray(truth) == 2)
    if wrong.mean() > 0.5:
        wrong = ~wrong
    return float(wrong.mean()), wrong


def run_cell(d, size, seed, config):
    data = generate_two_gaussians(d, config.sigma, size, seed)
    A = gaussian_adjacency(data.data, config.kernel_sigma)
    record = dict(d=float(d), size=int(size), seed=int(seed), ok=True)
    connected, _ = is_connected(A)
    if not connected:
        record.update(ok=False, flag="disconnected")
        return record
    params = DfvcParams(epsilon_s=config.epsilon_s, max_iterations=config.max_iterations,
                        patience=config.patience)
    try:
        result = compute_fiedler(build_spectra(A), params)
    except NumericalError as exc:
        record.update(ok=False, flag=type(exc).__name__)
        return record
    right, degenerate = sign_partition(result.vector)
    error, wrong = partition_error(right, data.labels)
    counts = result.per_point_switch_counts
    buckets = {}
    for name, mask in zip(SWITCH_BUCKETS, (counts == 0, counts == 1, counts >= 2)):
        buckets[name] = dict(points=int(mask.sum()), errors=int(wrong[mask].sum()))
    record.update(
        fiedler_value=result.value, error=error, iterations=result.iterations,
        converged=result.converged, degenerate=degenerate,
        total_switches=result.total_switches,
        mean_switches_per_iteration=result.total_switches / result.iterations,
        switch_buckets=buckets)
    return record


def _seed(config, size, rep):
    return int(np.random.SeedSequence([config.master_seed, int(size), rep]).generate_state(1)[0])


def summarize(cells):
    groups = {}
    for c in cells:
        groups.setdefault((c["d"], c["size"]), []).append(c)
    summary = []
    for (d, size), group in sorted(groups.items()):
        ok = [c for c in group if c["ok"]]
        row = dict(d=d, size=size, runs=len(group), failed=len(group) - len(ok))
        if ok:
            row.update(
                mean_fiedler_value=float(np.mean([c["fiedler_value"] for c in ok])),
                mean_error=float(np.mean([c["error"] for c in ok])),
                mean_total_switches=float(np.mean([c["total_switches"] for c in ok])))
            for name in SWITCH_BUCKETS:
                pts = sum(c["switch_buckets"][name]["points"] for c in ok)
                err = sum(c["switch_buckets"][name]["errors"] for c in ok)
                row[f"error_rate_switch_{name}"] = err / pts if pts else None
        summary.append(row)
    return summary


def trend_checks(cells):
    """The three seed-averaged inequalities, compared between the smallest
    and largest separation at every size."""
    ok = [c for c in cells if c["ok"]]
    if not ok:
        return {}
    d_lo, d_hi = min(c["d"] for c in ok), max(c["d"] for c in ok)
    checks = dict(d_low=d_lo, d_high=d_hi, connectivity=True, error=True, switch_error=True)
    for size in sorted({c["size"] for c in ok}):
        lo = [c for c in ok if c["size"] == size and c["d"] == d_lo]
        hi = [c for c in ok if c["size"] == size and c["d"] == d_hi]
        if not lo or not hi or d_lo == d_hi:
            continue
        if not np.mean([c["fiedler_value"] for c in hi]) < np.mean([c["fiedler_value"] for c in lo]):
            checks["connectivity"] = False
        if not np.mean([c["error"] for c in hi]) < np.mean([c["error"] for c in lo]):
            checks["error"] = False
    pts = {b: sum(c["switch_buckets"][b]["points"] for c in ok) for b in SWITCH_BUCKETS}
    err = {b: sum(c["switch_buckets"][b]["errors"] for c in ok) for b in SWITCH_BUCKETS}
    rate0 = err["0"] / pts["0"] if pts["0"] else None
    rate2 = err["2+"] / pts["2+"] if pts["2+"] else None
    checks["error_rate_switch_0"] = rate0
    checks["error_rate_switch_2+"] = rate2
    checks["switch_error"] = rate0 is not None and rate2 is not None and rate2 >= rate0
    return checks


def run_gaussian_experiment(config=None, progress=None):
    config = config or GaussianExperimentConfig()
    cells = []
    timings = {}
    for size in config.sizes:
        for rep in range(config.seeds):
            seed = _seed(config, size, rep)
            for d in config.d_values:
                t0 = time.perf_counter()
                cells.append(run_cell(d, size, seed, config))
                timings[f"d={float(d)},size={int(size)},rep={rep}"] = time.perf_counter() - t0
                if progress:
                    progress(cells[-1])
    return ExperimentReport(config=asdict(config), cells=cells, summary=summarize(cells),
                            trends=trend_checks(cells), timings=timings)
