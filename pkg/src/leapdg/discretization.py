"""Mesh + reference element: physical nodes and precomputed trace maps."""

from dataclasses import dataclass

import numpy as np

from .errors import NonConformingMeshError
from .mesh import BOUNDARY
from .reference import build_reference_operators

TRACE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Discretization:
    """Nodal DG space of degree N on a mesh.

    Fields are stored as (K, Np) arrays. Face traces are (K, 3, Nfp) arrays
    ordered counterclockwise within each element; ``exterior_index`` and
    ``vmapP`` point each trace node at its geometric twin in the neighbour.
    """

    mesh: object
    ops: object
    x: np.ndarray            # (K, Np)
    y: np.ndarray            # (K, Np)
    face_x: np.ndarray       # (K, 3, Nfp)
    face_y: np.ndarray
    exterior_index: np.ndarray  # (K, 3, Nfp) flat index into (K*3*Nfp) traces
    boundary: np.ndarray     # (K, 3) bool
    fscale: np.ndarray       # (K, 3) face_scaling / jacobian
    vmapM: np.ndarray        # (K, 3, Nfp) flat index of each trace node into (K*Np)
    vmapP: np.ndarray        # (K, 3, Nfp) flat index of the matched neighbour node

    @property
    def K(self):
        return self.mesh.num_elements

    @property
    def Np(self):
        return self.ops.Np

    @property
    def order(self):
        return self.ops.order

    def traces(self, u):
        """Interior traces of a (K, Np) field, shape (K, 3, Nfp)."""
        return u[:, self.ops.face_nodes]

    def exterior(self, trace):
        """Neighbour traces matched to local ordering; boundary faces return the interior."""
        return trace.reshape(-1)[self.exterior_index]

    def jump(self, u):
        """[u] = u^- - u^+ on interior faces and u^- on boundary faces."""
        tr = self.traces(u)
        jmp = tr - self.exterior(tr)
        return np.where(self.boundary[..., None], tr, jmp)

    def gradient(self, u):
        ops = self.ops
        ur = u @ ops.Dr.T
        us = u @ ops.Ds.T
        g = self.mesh.metric
        ux = g[:, 0, 0, None] * ur + g[:, 0, 1, None] * us
        uy = g[:, 1, 0, None] * ur + g[:, 1, 1, None] * us
        return ux, uy

    def lift(self, flux):
        """Strong-form surface term M^-1 * (surface integral of flux * basis)."""
        scaled = flux * self.fscale[..., None]
        return scaled.reshape(self.K, -1) @ self.ops.lift.T

    def interpolate(self, f, *args):
        """Nodal values f(x, y, *args) for every element."""
        return np.asarray(f(self.x, self.y, *args), dtype=float) * np.ones_like(self.x)

    def mass_apply(self, u):
        """Physical mass matrix times nodal vectors: J M u per element."""
        return self.mesh.jacobians[:, None] * (u @ self.ops.M)

    def inner(self, u, v):
        """Sum over elements of (u, v)_{T_k} for P_N fields."""
        return float(np.sum(self.mesh.jacobians[:, None] * (u @ self.ops.M) * v))

    def norm(self, *fields):
        """Joint L2(Omega) norm of one or more nodal fields."""
        return np.sqrt(sum(self.inner(u, u) for u in fields))


def build_discretization(mesh, order):
    ops = build_reference_operators(order)
    K = mesh.num_elements
    verts = mesh.vertices[mesh.triangles]  # (K, 3, 2)
    lam_r = 0.5 * (ops.r + 1.0)
    lam_s = 0.5 * (ops.s + 1.0)
    x = (verts[:, 0, 0, None] + np.outer(verts[:, 1, 0] - verts[:, 0, 0], lam_r)
         + np.outer(verts[:, 2, 0] - verts[:, 0, 0], lam_s))
    y = (verts[:, 0, 1, None] + np.outer(verts[:, 1, 1] - verts[:, 0, 1], lam_r)
         + np.outer(verts[:, 2, 1] - verts[:, 0, 1], lam_s))
    fx = x[:, ops.face_nodes]
    fy = y[:, ops.face_nodes]

    Nfp = ops.Nfp
    boundary = mesh.neighbors == BOUNDARY
    own = np.arange(K * 3 * Nfp).reshape(K, 3, Nfp)
    ext = own.copy()
    # neighbour faces run the opposite way; verify by coordinates
    rev = np.arange(Nfp)[::-1]
    ks, fs = np.nonzero(~boundary)
    k2 = mesh.neighbors[ks, fs]
    f2 = mesh.neighbor_faces[ks, fs]
    ext[ks, fs] = own[k2, f2][:, rev]
    dist = np.hypot(fx[ks, fs] - fx[k2, f2][:, rev], fy[ks, fs] - fy[k2, f2][:, rev])
    if len(dist):
        worst = np.argmax(dist.max(axis=1))
        scale = mesh.h.max()
        if dist[worst].max() > TRACE_TOL * max(scale, 1.0):
            # fall back to explicit nearest matching for orientation-inconsistent faces
            for i in np.flatnonzero(dist.max(axis=1) > TRACE_TOL * max(scale, 1.0)):
                k, f, kk, ff = ks[i], fs[i], k2[i], f2[i]
                d = np.hypot(fx[k, f][:, None] - fx[kk, ff][None, :],
                             fy[k, f][:, None] - fy[kk, ff][None, :])
                perm = d.argmin(axis=1)
                if d[np.arange(Nfp), perm].max() > TRACE_TOL * max(scale, 1.0):
                    raise NonConformingMeshError(
                        f"trace nodes of element {k} face {f} do not match neighbour "
                        f"{kk} face {ff}", face=(int(k), int(f)))
                ext[k, f] = own[kk, ff][perm]

    fscale = mesh.face_scalings / mesh.jacobians[:, None]
    Np = ops.Np
    vmapM = np.arange(K)[:, None, None] * Np + ops.face_nodes[None, :, :]
    e_elem, rem = np.divmod(ext, 3 * Nfp)
    e_face, e_node = np.divmod(rem, Nfp)
    vmapP = e_elem * Np + ops.face_nodes[e_face, e_node]
    disc = Discretization(mesh, ops, x, y, fx, fy, ext, boundary, fscale, vmapM, vmapP)
    for name in ("x", "y", "face_x", "face_y", "exterior_index", "boundary", "fscale",
                 "vmapM", "vmapP"):
        getattr(disc, name).setflags(write=False)
    return disc


def element_nodes(ops, mesh, element):
    """Physical coordinates of the nodes of one element."""
    v = mesh.vertices[mesh.triangles[element]]
    lr, ls = 0.5 * (ops.r + 1.0), 0.5 * (ops.s + 1.0)
    pts = v[0] + np.outer(lr, v[1] - v[0]) + np.outer(ls, v[2] - v[0])
    return pts[:, 0], pts[:, 1]


def project_function(ops, mesh, element, f):
    """Nodal interpolant of f(x, y) on one element."""
    x, y = element_nodes(ops, mesh, element)
    vals = np.asarray(f(x, y), dtype=float) * np.ones_like(x)
    bad = np.flatnonzero(~np.isfinite(vals))
    if len(bad):
        raise ValueError(f"non-finite value at node {int(bad[0])} of element {element}")
    return vals


def l2_inner_product(ops, mesh, element, u, v, weight=None):
    """(w u, v) on one element with w interpolated into P_N.

    Exact when w is constant and u, v are degree-N polynomials.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (ops.Np,) or v.shape != (ops.Np,):
        raise ValueError(f"coefficient vectors must have length {ops.Np}, "
                         f"got {u.shape} and {v.shape}")
    if weight is None:
        M = ops.M
    else:
        w = np.asarray(weight, dtype=float) * np.ones(ops.Np)
        if w.shape != (ops.Np,):
            raise ValueError(f"weight must have length {ops.Np}, got {w.shape}")
        M = ops.weighted_mass(w)
    return float(mesh.jacobians[element] * (u @ M @ v))


def locate_points(mesh, points, tol=1e-12):
    """Element index and reference coordinates (r, s) for each point.

    Points outside the mesh raise ValueError.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    p = mesh.vertices[mesh.triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    elems, rs = [], []
    for pt in points:
        d = pt - p[:, 0]
        l1 = (d[:, 0] * e2[:, 1] - d[:, 1] * e2[:, 0]) / det
        l2 = (e1[:, 0] * d[:, 1] - e1[:, 1] * d[:, 0]) / det
        inside = (l1 >= -tol) & (l2 >= -tol) & (l1 + l2 <= 1 + tol)
        hits = np.flatnonzero(inside)
        if not len(hits):
            raise ValueError(f"point {tuple(pt)} lies outside the mesh")
        k = int(hits[0])
        elems.append(k)
        rs.append((2 * l1[k] - 1, 2 * l2[k] - 1))
    rs = np.array(rs)
    return np.array(elems), rs[:, 0], rs[:, 1]


class PointProbe:
    """Evaluates nodal fields at fixed physical points."""

    def __init__(self, disc, points):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.elements, r, s = locate_points(disc.mesh, self.points)
        self._weights = disc.ops.interpolation_matrix(r, s)

    def __call__(self, u):
        return np.einsum("pi,pi->p", self._weights, u[self.elements])
