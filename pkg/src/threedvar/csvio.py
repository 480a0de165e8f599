"""Minimal CSV reading/writing with shortest round-trip float formatting."""

import io
import os

import numpy as np

from .errors import MissingColumn


def format_float(x):
    # repr() of a Python float is the shortest string that round-trips
    return repr(float(x))


def render_csv(columns, data, comments=()):
    """Render columns of equal length as CSV text.

    ``comments`` become leading ``# ...`` lines (configuration echoes).
    """
    arrays = [np.asarray(data[name], dtype=np.float64) for name in columns]
    n = len(arrays[0]) if arrays else 0
    if any(len(a) != n for a in arrays):
        raise ValueError("columns have different lengths")
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    buf.write(",".join(columns) + "\n")
    for row in zip(*(a.tolist() for a in arrays)):
        buf.write(",".join(map(format_float, row)) + "\n")
    return buf.getvalue()


def write_csv(path, columns, data, comments=()):
    text = render_csv(columns, data, comments)
    with open(os.fspath(path), "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def read_csv(path, required=()):
    """Read a numeric CSV written by ``write_csv`` into a dict of arrays."""
    with open(os.fspath(path), encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise MissingColumn(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    missing = [c for c in required if c not in header]
    if missing:
        raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}; header is {header}")
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    table = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    return {name: table[:, i].copy() for i, name in enumerate(header)}


def read_header(path):
    with open(os.fspath(path), encoding="utf-8") as fh:
        for ln in fh:
            if ln.strip() and not ln.lstrip().startswith("#"):
                return [h.strip() for h in ln.split(",")]
    return []
