"""Matrix, label and report files.

Matrices are UTF-8 CSV with one sample per row; label files hold one
positive integer per line. Reports come as sectioned text or JSON.
"""

import hashlib
import json
import math
import os
from pathlib import Path

import numpy as np

from .errors import InputError, ParseError
from .shc import LabeledDataset

REPORT_DIGITS = 12
CACHE_ENV = "CVCLUST_CACHE_DIR"


def _read_lines(path):
    path = Path(path)
    if not path.exists():
        raise InputError(f"input not found: {path}")
    return path.read_text(encoding="utf-8").splitlines()


def load_matrix(path, header=False):
    """Read a numeric CSV into an (n_samples, n_features) array."""
    rows = []
    width = None
    for lineno, line in enumerate(_read_lines(path), start=1):
        if header and lineno == 1:
            continue
        if not line.strip():
            continue
        cells = line.split(",")
        try:
            values = [float(c) for c in cells]
        except ValueError:
            bad = next(c for c in cells if not _is_float(c))
            raise ParseError(f"non-numeric cell {bad.strip()!r}", lineno, path) from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError("non-finite value", lineno, path)
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ParseError(f"ragged row: {len(values)} fields, expected {width}", lineno, path)
        rows.append(values)
    if not rows:
        raise ParseError("no data rows", None, path)
    return np.array(rows, dtype=float)


def _is_float(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_labels(path):
    labels = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        s = line.strip()
        if not s:
            continue
        try:
            v = int(s)
        except ValueError:
            raise ParseError(f"label {s!r} is not an integer", lineno, path) from None
        if v < 1:
            raise ParseError(f"label {v} is not positive", lineno, path)
        labels.append(v)
    return np.array(labels, dtype=int)


def check_contiguous(labels, path=None):
    present = sorted(set(np.asarray(labels).tolist()))
    if present != list(range(1, len(present) + 1)):
        raise ParseError(f"non-contiguous labels {present}; expected 1..n_c", None, path)
    return len(present)


def load_dataset(data_path, labels_path=None, header=False):
    """Load a CSV matrix, optionally with class labels.

    Without labels the raw (n_samples, n_features) array is returned;
    with labels a LabeledDataset with one column per sample.
    """
    X = load_matrix(data_path, header)
    if labels_path is None:
        return X
    labels = load_labels(labels_path)
    if labels.size != X.shape[0]:
        raise ParseError(f"{labels.size} labels for {X.shape[0]} data rows", None, labels_path)
    n_c = check_contiguous(labels, labels_path)
    return LabeledDataset(X.T, labels, n_c)


def save_matrix(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lines = [",".join(repr(float(v)) for v in row) for row in M]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_labels(path, labels):
    Path(path).write_text("".join(f"{int(v)}\n" for v in labels), encoding="utf-8")


def to_plain(obj):
    """Convert numpy containers and scalars to plain Python values."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.{REPORT_DIGITS}g}"
    if v is None:
        return "null"
    return str(v)


def _round(obj):
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round(v) for v in obj]
    if isinstance(obj, float) and math.isfinite(obj):
        return float(f"{obj:.{REPORT_DIGITS}g}")
    return obj


def _is_table(v):
    return isinstance(v, list) and v and all(isinstance(r, dict) for r in v)


def _text_lines(obj, section):
    scalars, nested = [], []
    for k, v in obj.items():
        if isinstance(v, dict) or _is_table(v):
            nested.append((k, v))
        elif isinstance(v, list):
            scalars.append(f"{k} = {', '.join(_fmt(x) if not isinstance(x, list) else str(x) for x in v)}")
        else:
            scalars.append(f"{k} = {_fmt(v)}")
    lines = []
    if section:
        lines.append(f"[{section}]")
    lines.extend(scalars)
    for k, v in nested:
        name = f"{section}.{k}" if section else k
        if lines:
            lines.append("")
        if isinstance(v, dict):
            lines.extend(_text_lines(v, name))
        else:
            cols = []
            for row in v:
                cols.extend(c for c in row if c not in cols)
            lines.append(f"[{name}]")
            lines.append("\t".join(cols))
            for row in v:
                lines.append("\t".join(_fmt(row.get(c)) if not isinstance(row.get(c), (dict, list))
                                       else json.dumps(row.get(c), sort_keys=True) for c in cols))
    return lines


def format_report(report, fmt="text"):
    report = to_plain(report)
    if fmt == "json":
        return json.dumps(_round(report), indent=2, sort_keys=False) + "\n"
    if fmt != "text":
        raise InputError(f"unknown report format {fmt!r}")
    return "\n".join(_text_lines(report, "")) + "\n"


def write_report(report, fmt="text", out=None):
    text = format_report(report, fmt)
    if out is None:
        return text
    Path(out).write_text(text, encoding="utf-8")
    return text


class BasisCache:
    """On-disk cache of learned bases keyed by a content hash."""

    def __init__(self, directory=None):
        directory = directory or os.environ.get(CACHE_ENV)
        if directory is None:
            raise InputError(f"no cache directory given and {CACHE_ENV} is unset")
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(X, d, seed, radius, max_alternations):
        h = hashlib.sha256()
        X = np.ascontiguousarray(X, dtype=float)
        h.update(str(X.shape).encode())
        h.update(X.tobytes())
        h.update(repr((int(d), int(seed), radius, int(max_alternations))).encode())
        return h.hexdigest()

    def _path(self, key):
        return self.directory / f"{key}.csv"

    def get(self, key):
        p = self._path(key)
        if not p.exists():
            return None
        return load_matrix(p).T

    def put(self, key, basis):
        # rows are basis columns, matching the one-sample-per-row convention
        save_matrix(self._path(key), np.asarray(basis).T)
