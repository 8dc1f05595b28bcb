"""Conforming triangular meshes: generation, file input, connectivity and geometry."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (InvertedElementError, MeshError, MeshIOError, MeshParseError,
                     NonConformingMeshError, UnsupportedElementError)

logger = logging.getLogger(__name__)

# local vertex pairs of faces 0, 1, 2
FACE_VERTICES = ((0, 1), (1, 2), (2, 0))
BOUNDARY = -1


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable triangle mesh with precomputed connectivity and geometry.

    ``neighbors[k, f]`` is the element across face ``f`` of element ``k``
    (``BOUNDARY`` on the domain boundary) and ``neighbor_faces[k, f]`` the
    matching local face index there. Face ``f`` joins local vertices
    ``FACE_VERTICES[f]``.
    """

    vertices: np.ndarray        # (Nv, 2)
    triangles: np.ndarray       # (K, 3), counterclockwise
    regions: np.ndarray         # (K,) integer region tags
    neighbors: np.ndarray       # (K, 3)
    neighbor_faces: np.ndarray  # (K, 3)
    normals: np.ndarray         # (K, 3, 2) unit outward
    face_lengths: np.ndarray    # (K, 3)
    jacobians: np.ndarray       # (K,) physical area / reference area
    face_scalings: np.ndarray   # (K, 3) face length / reference face parameter length (2)
    h: np.ndarray               # (K,) diameters
    tau: np.ndarray             # (K,) inscribed-circle diameters
    metric: np.ndarray          # (K, 2, 2) [[rx, sx], [ry, sy]]

    @property
    def num_elements(self):
        return len(self.triangles)

    @property
    def boundary_mask(self):
        return self.neighbors == BOUNDARY

    @property
    def num_boundary_faces(self):
        return int(self.boundary_mask.sum())

    @property
    def num_internal_faces(self):
        return int((~self.boundary_mask).sum()) // 2

    @property
    def areas(self):
        return 2.0 * self.jacobians

    @property
    def centroids(self):
        return self.vertices[self.triangles].mean(axis=1)


def build_mesh(vertices, triangles, regions=None):
    """Validate raw arrays and compute connectivity and geometry."""
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.ascontiguousarray(triangles, dtype=np.int64)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise MeshError("vertices must have shape (Nv, 2)")
    if triangles.ndim != 2 or triangles.shape[1] != 3 or len(triangles) == 0:
        raise MeshError("triangles must have shape (K, 3) with K >= 1")
    if triangles.min() < 0 or triangles.max() >= len(vertices):
        raise MeshError("triangle references a vertex index out of range")
    K = len(triangles)
    if regions is None:
        regions = np.zeros(K, dtype=np.int64)
    regions = np.ascontiguousarray(regions, dtype=np.int64)

    p = vertices[triangles]  # (K, 3, 2)
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    bad = np.flatnonzero(det <= 0.0)
    if len(bad):
        k = int(bad[0])
        raise InvertedElementError(
            f"element {k} is inverted or degenerate (signed area {0.5 * det[k]:.3e})",
            element=k)

    neighbors, neighbor_faces = _connect(vertices, triangles)

    # reference map x = v0 + (r + 1)/2 (v1 - v0) + (s + 1)/2 (v2 - v0)
    jac = 0.25 * det
    xr, yr = 0.5 * e1[:, 0], 0.5 * e1[:, 1]
    xs, ys = 0.5 * e2[:, 0], 0.5 * e2[:, 1]
    metric = np.empty((K, 2, 2))
    metric[:, 0, 0] = ys / jac   # rx
    metric[:, 0, 1] = -yr / jac  # sx
    metric[:, 1, 0] = -xs / jac  # ry
    metric[:, 1, 1] = xr / jac   # sy

    normals = np.empty((K, 3, 2))
    lengths = np.empty((K, 3))
    for f, (a, b) in enumerate(FACE_VERTICES):
        edge = p[:, b] - p[:, a]
        length = np.hypot(edge[:, 0], edge[:, 1])
        lengths[:, f] = length
        # outward for counterclockwise triangles
        normals[:, f, 0] = edge[:, 1] / length
        normals[:, f, 1] = -edge[:, 0] / length

    h = lengths.max(axis=1)
    tau = 4.0 * (0.5 * det) / lengths.sum(axis=1)

    mesh = Mesh(vertices, triangles, regions, neighbors, neighbor_faces, normals,
                lengths, jac, 0.5 * lengths, h, tau, metric)
    for arr in vars(mesh).values():
        arr.setflags(write=False)
    return mesh


def _connect(vertices, triangles):
    K = len(triangles)
    neighbors = np.full((K, 3), BOUNDARY, dtype=np.int64)
    neighbor_faces = np.full((K, 3), BOUNDARY, dtype=np.int64)

    owners = {}
    for k, tri in enumerate(triangles):
        for f, (a, b) in enumerate(FACE_VERTICES):
            key = (min(tri[a], tri[b]), max(tri[a], tri[b]))
            other = owners.get(key)
            if other is None:
                owners[key] = (k, f)
                continue
            if other[0] < 0:
                raise NonConformingMeshError(
                    f"face {key} (element {k}, face {f}) is shared by more than two elements",
                    face=(k, f))
            k2, f2 = other
            neighbors[k, f], neighbor_faces[k, f] = k2, f2
            neighbors[k2, f2], neighbor_faces[k2, f2] = k, f
            owners[key] = (-1, -1)

    _check_hanging_nodes(vertices, triangles, neighbors)
    return neighbors, neighbor_faces


def _check_hanging_nodes(vertices, triangles, neighbors):
    """Reject vertices lying strictly inside an unmatched face."""
    ks, fs = np.nonzero(neighbors == BOUNDARY)
    if len(ks) == 0:
        return
    local = np.array(FACE_VERTICES)
    va = triangles[ks, local[fs, 0]]
    vb = triangles[ks, local[fs, 1]]
    candidates = np.unique(np.concatenate([va, vb]))
    pts = vertices[candidates]
    a = vertices[va]
    b = vertices[vb]
    edge = b - a
    length2 = (edge**2).sum(axis=1)
    for i in range(len(ks)):
        rel = pts - a[i]
        t = rel @ edge[i] / length2[i]
        cross = edge[i, 0] * rel[:, 1] - edge[i, 1] * rel[:, 0]
        tol = 1e-10 * np.sqrt(length2[i])
        inside = (np.abs(cross) <= tol * np.sqrt(length2[i])) & (t > 1e-10) & (t < 1 - 1e-10)
        if inside.any():
            v = int(candidates[np.flatnonzero(inside)[0]])
            raise NonConformingMeshError(
                f"face {i} of element {int(ks[i])} (local face {int(fs[i])}) contains "
                f"vertex {v} in its interior; the mesh is not conforming",
                face=(int(ks[i]), int(fs[i])))


def generate_structured_square(n_per_side, bounds=(-1.0, 1.0), region_fn=None):
    """Uniform grid of ``n_per_side``^2 cells, each split along its SW-NE diagonal.

    ``bounds`` is ``(lo, hi)`` applied to both axes. ``region_fn(x, y)``, if
    given, maps centroid coordinate arrays to integer region tags.
    """
    n = int(n_per_side)
    if n < 1:
        raise MeshError(f"n_per_side must be >= 1, got {n_per_side!r}")
    lo, hi = map(float, bounds)
    if not hi > lo:
        raise MeshError("bounds must satisfy lo < hi")
    coords = np.linspace(lo, hi, n + 1)
    X, Y = np.meshgrid(coords, coords, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    regions = None
    if region_fn is not None:
        c = vertices[triangles].mean(axis=1)
        regions = np.asarray(region_fn(c[:, 0], c[:, 1]), dtype=np.int64)
    return build_mesh(vertices, triangles, regions)


# {{{ file input

def load_mesh(path, format="simple_ascii"):
    """Read a mesh file in ``simple_ascii`` or ``gmsh22_ascii`` format."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MeshIOError(f"cannot read mesh file {path}: {exc}") from exc
    lines = text.splitlines()
    if format == "simple_ascii":
        vertices, triangles, regions = _parse_simple(lines)
    elif format in ("gmsh22_ascii", "gmsh"):
        vertices, triangles, regions = _parse_gmsh22(lines)
    else:
        raise MeshError(f"unknown mesh format {format!r}")
    mesh = build_mesh(vertices, triangles, regions)
    logger.info("loaded %s: %d vertices, %d triangles", path, len(vertices), len(triangles))
    return mesh


class _LineReader:
    def __init__(self, lines):
        self.lines = lines
        self.pos = 0

    def next(self, what):
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line:
                return line
        raise MeshParseError(f"unexpected end of file while reading {what}", self.pos)

    @property
    def lineno(self):
        return self.pos


def _ints(reader, line, count, what):
    parts = line.split()
    if len(parts) < count:
        raise MeshParseError(f"expected {count} integers for {what}, got {line!r}", reader.lineno)
    try:
        return [int(v) for v in parts[:count]]
    except ValueError:
        raise MeshParseError(f"invalid integer in {what}: {line!r}", reader.lineno) from None


def _floats(reader, line, count, what):
    parts = line.split()
    if len(parts) < count:
        raise MeshParseError(f"expected {count} numbers for {what}, got {line!r}", reader.lineno)
    try:
        return [float(v) for v in parts[:count]]
    except ValueError:
        raise MeshParseError(f"invalid number in {what}: {line!r}", reader.lineno) from None


def _parse_simple(lines):
    reader = _LineReader(lines)
    nv, nt = _ints(reader, reader.next("header"), 2, "header 'NV NT'")
    vertices = np.array([_floats(reader, reader.next("vertex"), 2, "vertex")
                         for _ in range(nv)]).reshape(nv, 2)
    tris = np.array([_ints(reader, reader.next("triangle"), 4, "triangle 'v0 v1 v2 tag'")
                     for _ in range(nt)], dtype=np.int64).reshape(nt, 4)
    if nt and (tris[:, :3].min() < 0 or tris[:, :3].max() >= nv):
        raise MeshParseError("triangle vertex index out of range")
    return vertices, tris[:, :3], tris[:, 3]


_GMSH_NODE_COUNTS = {1: 2, 2: 3, 3: 4, 4: 4, 5: 8, 6: 6, 7: 5, 8: 3, 9: 6, 15: 1}
_GMSH_IGNORED = {1, 15}  # lines and points carry boundary tags only


def _parse_gmsh22(lines):
    reader = _LineReader(lines)
    nodes = None
    tris, tags = [], []
    seen_format = False
    while reader.pos < len(lines):
        line = lines[reader.pos].strip()
        reader.pos += 1
        if not line:
            continue
        if line == "$MeshFormat":
            fmt = reader.next("$MeshFormat").split()
            if not fmt or not fmt[0].startswith("2"):
                raise MeshParseError(f"unsupported Gmsh version {fmt[:1]}", reader.lineno)
            if len(fmt) > 1 and fmt[1] != "0":
                raise MeshParseError("binary Gmsh files are not supported", reader.lineno)
            seen_format = True
            _expect(reader, "$EndMeshFormat")
        elif line == "$Nodes":
            (count,) = _ints(reader, reader.next("$Nodes"), 1, "node count")
            nodes = {}
            for _ in range(count):
                l = reader.next("node")
                (tag,) = _ints(reader, l, 1, "node id")
                x, y = _floats(reader, " ".join(l.split()[1:]), 2, "node coordinates")
                nodes[tag] = (x, y)
            _expect(reader, "$EndNodes")
        elif line == "$Elements":
            (count,) = _ints(reader, reader.next("$Elements"), 1, "element count")
            for _ in range(count):
                l = reader.next("element")
                parts = _ints(reader, l, 3, "element header")
                etype, ntags = parts[1], parts[2]
                if etype in _GMSH_IGNORED:
                    continue
                if etype != 2:
                    raise UnsupportedElementError(
                        f"unsupported element type {etype}; only triangles (type 2) are allowed",
                        reader.lineno)
                values = _ints(reader, l, 3 + ntags + 3, "triangle element")
                tags.append(values[3] if ntags > 0 else 0)
                tris.append(values[3 + ntags:3 + ntags + 3])
            _expect(reader, "$EndElements")
        elif line.startswith("$"):
            # skip unknown sections such as $PhysicalNames
            end = "$End" + line[1:]
            while reader.next(end) != end:
                pass
        else:
            raise MeshParseError(f"unexpected content {line!r}", reader.lineno)

    if not seen_format:
        raise MeshParseError("missing $MeshFormat section")
    if nodes is None:
        raise MeshParseError("missing $Nodes section")
    if not tris:
        raise MeshParseError("no triangle elements found")

    ids = sorted(nodes)
    index = {tag: i for i, tag in enumerate(ids)}
    vertices = np.array([nodes[t] for t in ids])
    try:
        triangles = np.array([[index[v] for v in tri] for tri in tris], dtype=np.int64)
    except KeyError as exc:
        raise MeshParseError(f"element references undefined node {exc.args[0]}") from None
    return vertices, triangles, np.array(tags, dtype=np.int64)


def _expect(reader, token):
    line = reader.next(token)
    if line != token:
        raise MeshParseError(f"expected {token}, got {line!r}", reader.lineno)


def write_simple_ascii(mesh, path):
    with open(path, "w") as out:
        out.write(f"{len(mesh.vertices)} {mesh.num_elements}\n")
        for x, y in mesh.vertices:
            out.write(f"{float(x)!r} {float(y)!r}\n")
        for tri, tag in zip(mesh.triangles, mesh.regions):
            out.write(f"{tri[0]} {tri[1]} {tri[2]} {tag}\n")

# }}}


def mesh_quality(mesh):
    """Diameter range and worst shape-regularity ratio h_k / tau_k."""
    return {
        "min_h": float(mesh.h.min()),
        "max_h": float(mesh.h.max()),
        "max_ratio": float((mesh.h / mesh.tau).max()),
    }
