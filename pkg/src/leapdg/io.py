"""File output: VTK legacy snapshots, nodal CSV dumps and probe time series."""

import csv
from pathlib import Path

import numpy as np


def _subtriangles(order):
    """Split the nodal lattice of degree ``order`` into (order)^2 small triangles.

    Nodes are numbered row by row in s, which is how the reference nodes are ordered.
    """
    idx = {}
    n = 0
    for j in range(order + 1):
        for i in range(order + 1 - j):
            idx[i, j] = n
            n += 1
    tris = []
    for j in range(order):
        for i in range(order - j):
            tris.append((idx[i, j], idx[i + 1, j], idx[i, j + 1]))
            if i + j < order - 1:
                tris.append((idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]))
    return np.array(tris, dtype=np.int64)


def write_vtk(path, disc, fields, title="leapdg snapshot"):
    """Write nodal fields as a legacy ASCII UNSTRUCTURED_GRID.

    Every element keeps its own copy of its nodes, so values stay
    discontinuous across faces. Each element is drawn as order^2 linear
    sub-triangles through its nodes.
    """
    K, Np = disc.x.shape
    sub = _subtriangles(disc.order)
    cells = (np.arange(K)[:, None, None] * Np + sub[None]).reshape(-1, 3)
    path = Path(path)
    with open(path, "w") as out:
        out.write("# vtk DataFile Version 3.0\n")
        out.write(f"{title}\n")
        out.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        out.write(f"POINTS {K * Np} double\n")
        pts = np.column_stack([disc.x.ravel(), disc.y.ravel(), np.zeros(K * Np)])
        np.savetxt(out, pts, fmt="%.17g")
        out.write(f"CELLS {len(cells)} {4 * len(cells)}\n")
        np.savetxt(out, np.column_stack([np.full(len(cells), 3), cells]), fmt="%d")
        out.write(f"CELL_TYPES {len(cells)}\n")
        np.savetxt(out, np.full(len(cells), 5), fmt="%d")
        out.write(f"POINT_DATA {K * Np}\n")
        for name, values in fields.items():
            out.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            np.savetxt(out, np.asarray(values, dtype=float).ravel(), fmt="%.17g")
    return path


def read_vtk_point_data(path):
    """Minimal reader for files produced by ``write_vtk``; returns (points, fields)."""
    lines = Path(path).read_text().split("\n")
    i = 0
    points, fields = None, {}
    while i < len(lines):
        tok = lines[i].split()
        if tok and tok[0] == "POINTS":
            n = int(tok[1])
            points = np.loadtxt(lines[i + 1:i + 1 + n], ndmin=2)
            i += n
        elif tok and tok[0] == "POINT_DATA":
            n = int(tok[1])
        elif tok and tok[0] == "SCALARS":
            fields[tok[1]] = np.loadtxt(lines[i + 2:i + 2 + n], ndmin=1)
            i += n + 1
        i += 1
    return points, fields


def write_nodal_csv(path, disc, fields):
    names = list(fields)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["element", "node", "x", "y"] + names)
        K, Np = disc.x.shape
        cols = [np.asarray(fields[n]).reshape(K, Np) for n in names]
        for k in range(K):
            for i in range(Np):
                w.writerow([k, i, repr(float(disc.x[k, i])), repr(float(disc.y[k, i]))]
                           + [repr(float(c[k, i])) for c in cols])


class TimeSeriesWriter:
    """Append-only CSV with a time column followed by named values."""

    def __init__(self, path, columns):
        self.path = Path(path)
        self.columns = list(columns)
        self._fh = open(self.path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(["t"] + self.columns)

    def write(self, t, values):
        self._w.writerow([repr(float(t))] + [repr(float(v)) for v in values])

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
