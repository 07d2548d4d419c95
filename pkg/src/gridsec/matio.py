"""Plain-text matrix exchange format for test fixtures and the CLI.

The format is line oriented: the first line holds ``rows cols``, and each
of the following ``rows`` lines holds ``cols`` whitespace-separated decimal
values (row major).  Vectors are stored as single-column matrices.  Values
are written with ``repr`` so a write/read round trip is bit exact.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError


def write_matrix(path, a) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    rows, cols = a.shape
    lines = [f"{rows} {cols}"]
    for r in range(rows):
        lines.append(" ".join(repr(float(v)) for v in a[r]))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        tokens = fh.readline().split()
        if len(tokens) != 2:
            raise DimensionError(f"{path}: header must be 'rows cols'")
        rows, cols = int(tokens[0]), int(tokens[1])
        a = np.empty((rows, cols))
        for r in range(rows):
            vals = fh.readline().split()
            if len(vals) != cols:
                raise DimensionError(f"{path}: row {r} has {len(vals)} values, expected {cols}")
            a[r] = [float(v) for v in vals]
    return a


def write_vector(path, v) -> None:
    v = np.asarray(v, dtype=float).reshape(-1, 1)
    write_matrix(path, v)


def read_vector(path) -> np.ndarray:
    a = read_matrix(path)
    if 1 not in a.shape:
        raise DimensionError(f"{path}: expected a single row or column, got {a.shape}")
    return a.reshape(-1)
