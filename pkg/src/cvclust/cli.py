"""Command-line front end.

Exit codes: 0 success, 1 pipeline or numerical failure, 2 input or
configuration error.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cvc import classify_dataset
from .dfvc import DfvcParams, compute_fiedler, sign_partition
from .errors import CVCError, InputError, NumericalError
from .graph import build_spectra, is_connected
from .grassmann import build_ensemble, classify_ensemble
from .io import (BasisCache, format_report, load_dataset, load_labels,
                 load_matrix, save_labels, save_matrix, to_plain)
from .proximity import ProximityConfig, build_proximity
from .shc import LabeledDataset, cluster
from .synth import GaussianExperimentConfig, generate_gallery, generate_two_gaussians, \
    run_gaussian_experiment

DEFAULTS = {
    "seed": 0,
    "format": "text",
    "header": False,
    "proximity": "lasso",
    "w": None,
    "kernel_sigma": None,
    "epsilon_s": None,
    "max_iterations": 1000,
    "patience": 20,
    "distance": "bhattacharyya",
    "fusion": "none",
    "nu": None,
    "max_alternations": 50,
    "cache_dir": None,
    "d_values": [2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
    "sizes": list(range(100, 501, 25)),
    "sigma": 2.0,
    "seeds": 20,
}


def _common(p):
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=["text", "json"])
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--config", help="JSON file of option defaults")
    p.add_argument("--header", action="store_const", const=True,
                   help="skip the first line of every CSV input")


def _pipeline(p):
    p.add_argument("--proximity", choices=["gaussian", "lasso", "ls", "omp"])
    p.add_argument("--w", type=float, help="lasso weight or OMP atom budget")
    p.add_argument("--kernel-sigma", type=float)
    p.add_argument("--epsilon-s", type=int)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--patience", type=int, help="consecutive sign-stable iterations before stopping")


def build_parser():
    parser = argparse.ArgumentParser(prog="cvclust", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="label a probe set against a gallery")
    _common(p)
    _pipeline(p)
    p.add_argument("--gallery", required=True)
    p.add_argument("--gallery-labels", required=True)
    p.add_argument("--gallery-sets", help="set id per gallery row (default: one set per class)")
    p.add_argument("--probe", required=True)
    p.add_argument("--distance", choices=["bhattacharyya", "hellinger"])
    p.add_argument("--fusion", choices=["sum", "mode", "none"])
    p.add_argument("--nu", type=int, help="largest manifold dimension of the ensemble")
    p.add_argument("--max-alternations", type=int)
    p.add_argument("--cache-dir")

    p = sub.add_parser("cluster", help="semi-supervised hierarchical clustering")
    _common(p)
    _pipeline(p)
    p.add_argument("--data", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--probe", help="probe rows appended after the data")

    p = sub.add_parser("fiedler", help="Fiedler vector of an affinity matrix")
    _common(p)
    p.add_argument("--affinity", required=True)
    p.add_argument("--eta", type=float)
    p.add_argument("--epsilon-s", type=int)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--patience", type=int, help="consecutive sign-stable iterations before stopping")

    p = sub.add_parser("experiment", help="two-Gaussian connectivity experiment")
    _common(p)
    p.add_argument("--d-values", type=float, nargs="+")
    p.add_argument("--sizes", type=int, nargs="+")
    p.add_argument("--sigma", type=float)
    p.add_argument("--seeds", type=int)
    p.add_argument("--kernel-sigma", type=float)
    p.add_argument("--epsilon-s", type=int)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--patience", type=int, help="consecutive sign-stable iterations before stopping")

    p = sub.add_parser("synth", help="write synthetic data sets as CSV")
    _common(p)
    p.add_argument("kind", choices=["two-gaussians", "gallery"])
    p.add_argument("--out-dir", required=True)
    p.add_argument("--d", type=float, default=4.0)
    p.add_argument("--sigma", type=float)
    p.add_argument("--n", type=int, default=100, help="points per cluster or class")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--probe-class", type=int, default=1)
    p.add_argument("--probe-size", type=int, default=50)
    p.add_argument("--separation", type=float, default=6.0)
    p.add_argument("--outliers", type=float, default=0.0)
    return parser


def resolve_config(args):
    """Built-in defaults, overridden by the config file, overridden by flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise InputError(f"input not found: {path}")
        try:
            cfg.update(json.loads(path.read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON config ({exc})") from exc
    for k, v in vars(args).items():
        if v is not None and k != "config":
            cfg[k] = v
    if cfg.get("w") is None:
        cfg["w"] = 2 if cfg["proximity"] == "omp" else 0.01
    return cfg


def _proximity(cfg):
    return ProximityConfig(method=cfg["proximity"], w=cfg["w"], kernel_sigma=cfg["kernel_sigma"])


def _dfvc(cfg):
    return DfvcParams(eta=cfg.get("eta"), epsilon_s=cfg["epsilon_s"],
                      max_iterations=cfg["max_iterations"], patience=cfg["patience"])


def _echo(cfg):
    skip = {"command", "out", "format"}
    return {k: v for k, v in sorted(cfg.items()) if k not in skip}


def _trace(assignment):
    return [dict(parent=t.parent, children=list(t.children), level=t.level, method=t.method,
                 fiedler_value=t.fiedler_value, delta_s=t.delta_s, iterations=t.iterations,
                 converged=t.converged) for t in assignment.tree_trace]


def cmd_classify(cfg):
    gallery = load_dataset(cfg["gallery"], cfg["gallery_labels"], cfg["header"])
    probe = load_matrix(cfg["probe"], cfg["header"]).T
    if probe.shape[0] != gallery.data.shape[0]:
        raise InputError(f"probe has {probe.shape[0]} features, gallery has {gallery.data.shape[0]}")
    dataset = LabeledDataset.from_sets(gallery.data, gallery.labels, probe)
    report = {"command": "classify", "version": __version__}

    use_ensemble = cfg["fusion"] != "none" or cfg["nu"] is not None
    if not use_ensemble:
        res = classify_dataset(dataset, _proximity(cfg), _dfvc(cfg), cfg["distance"])
        report["result"] = dict(predicted_label=res.predicted_label, snr=res.snr,
                                n_clusters=res.assignment.n_clusters,
                                cluster_sizes=res.assignment.sizes(),
                                unsplittable=res.assignment.unsplittable)
        report["distances"] = [dict(class_label=i + 1, distance=d)
                               for i, d in enumerate(res.distances)]
    else:
        nu = cfg["nu"] or 1
        if cfg.get("gallery_sets"):
            set_ids = load_labels(cfg["gallery_sets"])
            if set_ids.size != gallery.labels.size:
                raise InputError("gallery-sets needs one set id per gallery row")
        else:
            set_ids = gallery.labels
        sets, set_labels = [], []
        for s in sorted(set(set_ids.tolist())):
            mask = set_ids == s
            classes = set(gallery.labels[mask].tolist())
            if len(classes) != 1:
                raise InputError(f"gallery set {s} mixes classes {sorted(classes)}")
            sets.append(gallery.data[:, mask])
            set_labels.append(classes.pop())
        sets.append(probe)
        cache = BasisCache(cfg["cache_dir"]) if cfg["cache_dir"] else None
        ens = build_ensemble(sets, nu, cfg["seed"], cfg["max_alternations"], cache=cache)
        res = classify_ensemble(ens, set_labels, len(sets) - 1, cfg["fusion"], _proximity(cfg),
                                _dfvc(cfg), cfg["distance"])
        report["result"] = dict(predicted_label=res.predicted_label, snr=res.snr,
                                fusion=res.fusion, per_dimension_labels=res.per_dimension_labels)
        report["distances"] = [dict(class_label=i + 1, distance=d)
                               for i, d in enumerate(res.fused_distances)]
        report["per_dimension"] = [
            dict(dimension=j + 1, label=r.predicted_label if r else None,
                 n_clusters=r.assignment.n_clusters if r else None,
                 distances=list(r.distances) if r else None)
            for j, r in enumerate(res.per_dimension)]
    report["config"] = _echo(cfg)
    return report


def cmd_cluster(cfg):
    data = load_dataset(cfg["data"], cfg["labels"], cfg["header"])
    if cfg.get("probe"):
        probe = load_matrix(cfg["probe"], cfg["header"]).T
        data = LabeledDataset.from_sets(data.data, data.labels, probe)
    A = build_proximity(data.data, _proximity(cfg))
    assignment = cluster(A, data.labels, data.probe_label, _dfvc(cfg))
    return {"command": "cluster", "version": __version__,
            "result": dict(n_clusters=assignment.n_clusters, cluster_sizes=assignment.sizes(),
                           unsplittable=assignment.unsplittable,
                           cluster_labels=assignment.labels),
            "tree_trace": _trace(assignment), "config": _echo(cfg)}


def cmd_fiedler(cfg):
    A = load_matrix(cfg["affinity"], cfg["header"])
    connected, _ = is_connected(A)
    if not connected:
        raise NumericalError("affinity graph is disconnected; the Fiedler vector is not unique")
    res = compute_fiedler(build_spectra(A), _dfvc(cfg))
    right, degenerate = sign_partition(res.vector)
    return {"command": "fiedler", "version": __version__,
            "result": dict(fiedler_value=res.value, iterations=res.iterations,
                           converged=res.converged, eta=res.eta, restarts=res.restarts,
                           degenerate=degenerate, fiedler_vector=res.vector,
                           partition=right.astype(int), sign_switch_history=res.sign_switch_history,
                           per_point_switch_counts=res.per_point_switch_counts),
            "config": _echo(cfg)}


def cmd_experiment(cfg):
    config = GaussianExperimentConfig(
        d_values=tuple(float(d) for d in cfg["d_values"]), sigma=cfg["sigma"],
        sizes=tuple(int(s) for s in cfg["sizes"]), seeds=cfg["seeds"], master_seed=cfg["seed"],
        kernel_sigma=cfg["kernel_sigma"], epsilon_s=cfg["epsilon_s"],
        max_iterations=cfg["max_iterations"], patience=cfg["patience"])
    report = run_gaussian_experiment(config)
    out = {"command": "experiment"}
    out.update(report.to_dict())
    return out


def cmd_synth(cfg):
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    sigma = cfg["sigma"] if cfg.get("sigma") is not None else (2.0 if cfg["kind"] == "two-gaussians" else 1.0)
    files = {}
    if cfg["kind"] == "two-gaussians":
        ds = generate_two_gaussians(cfg["d"], sigma, cfg["n"], cfg["seed"])
        save_matrix(out / "data.csv", ds.data.T)
        save_labels(out / "labels.csv", ds.labels)
        files = dict(data=str(out / "data.csv"), labels=str(out / "labels.csv"))
    else:
        g, gl, p = generate_gallery(cfg["classes"], cfg["n"], cfg["probe_size"], cfg["probe_class"],
                                    cfg["separation"], sigma, cfg["seed"], cfg["outliers"])
        save_matrix(out / "gallery.csv", g.T)
        save_labels(out / "gallery_labels.csv", gl)
        save_matrix(out / "probe.csv", p.T)
        files = dict(gallery=str(out / "gallery.csv"), gallery_labels=str(out / "gallery_labels.csv"),
                     probe=str(out / "probe.csv"))
    return {"command": "synth", "version": __version__, "files": files, "config": _echo(cfg)}


COMMANDS = {"classify": cmd_classify, "cluster": cmd_cluster, "fiedler": cmd_fiedler,
            "experiment": cmd_experiment, "synth": cmd_synth}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    fmt = args.format or "text"
    try:
        cfg = resolve_config(args)
        fmt = cfg["format"]
        report = COMMANDS[args.command](cfg)
        text = format_report(to_plain(report), fmt)
        if cfg.get("out"):
            Path(cfg["out"]).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return 0
    except (InputError, ValueError, OSError) as exc:
        code = 2
        err = exc
    except CVCError as exc:
        code = 1
        err = exc
    except np.linalg.LinAlgError as exc:
        code = 1
        err = exc
    record = {"error": {"type": type(err).__name__, "message": str(err), "exit_code": code}}
    sys.stderr.write(format_report(record, fmt if fmt in ("text", "json") else "text"))
    return code


if __name__ == "__main__":
    sys.exit(main())
