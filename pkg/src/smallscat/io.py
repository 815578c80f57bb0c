"""Comma-separated tables and the JSON run summary.

Floats are written with ``%.17g`` so files round-trip exactly; complex
columns become ``re_<name>, im_<name>`` pairs.
"""
import json
import os

import numpy as np


def _expand(columns):
    names, cols = [], []
    for name, values in columns:
        v = np.asarray(values)
        if np.iscomplexobj(v):
            names += [f"re_{name}", f"im_{name}"]
            cols += [v.real, v.imag]
        else:
            names.append(name)
            cols.append(v)
    return names, cols


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def write_table(path, columns):
    """Write ``[(name, 1-d array), ...]`` as a CSV file with a one-line header."""
    names, cols = _expand(columns)
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("table columns differ in length")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(n):
            fh.write(",".join(_fmt(c[i]) for c in cols) + "\n")
    return path


def read_table(path):
    """Read a table written by :func:`write_table` into a dict of float arrays."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    with open(path, encoding="utf-8") as fh:
        names = fh.readline().strip().split(",")
    return {n: data[:, i] for i, n in enumerate(names)}


def xyz_columns(x):
    x = np.asarray(x)
    return [("x", x[:, 0]), ("y", x[:, 1]), ("z", x[:, 2])]


def vector_columns(name, v):
    v = np.asarray(v)
    return [(f"{name}{c}", v[:, i]) for i, c in enumerate("xyz")]


def write_cloud(path, cloud):
    """Snapshot ``m, x, y, z, a, kappa, re_h, im_h``."""
    M = cloud.M
    cols = [("m", np.arange(M))] + xyz_columns(cloud.centers)
    cols += [("a", np.full(M, cloud.a)), ("kappa", np.full(M, cloud.config.kappa)), ("h", cloud.h.astype(complex))]
    return write_table(path, cols)


def write_field(path, x, E):
    return write_table(path, xyz_columns(x) + vector_columns("E", np.asarray(E, dtype=complex)))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    return obj


def write_summary(path, record):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(record), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
