"""Anisotropic permittivity, permeability and face impedances."""

from dataclasses import dataclass
from typing import Callable, Mapping, Union

import numpy as np

from .errors import MaterialError

Coefficient = Union[float, Callable]


@dataclass(frozen=True)
class Material:
    """Coefficients of one region; each entry is a constant or f(x, y)."""

    eps_xx: Coefficient = 1.0
    eps_yy: Coefficient = 1.0
    eps_xy: Coefficient = 0.0
    mu: Coefficient = 1.0

    @classmethod
    def isotropic(cls, eps=1.0, mu=1.0):
        return cls(eps, eps, 0.0, mu)


@dataclass(frozen=True, eq=False)
class MaterialField:
    eps_xx: np.ndarray  # (K, Np)
    eps_xy: np.ndarray
    eps_yy: np.ndarray
    mu: np.ndarray
    eps_lb: float
    eps_ub: float
    mu_lb: float
    mu_ub: float


@dataclass(frozen=True, eq=False)
class ImpedanceMap:
    """Per (element, face) values on the local side and the matched neighbour side."""

    c: np.ndarray      # (K, 3)
    Z: np.ndarray
    Y: np.ndarray
    Z_ext: np.ndarray
    Y_ext: np.ndarray


def _evaluate(coef, x, y):
    if callable(coef):
        vals = np.asarray(coef(x, y), dtype=float)
    else:
        vals = np.full_like(x, float(coef))
    return np.broadcast_to(vals, x.shape).astype(float)


def eigen_bounds(exx, exy, eyy):
    """Smaller and larger eigenvalue of symmetric 2x2 tensors."""
    mean = 0.5 * (exx + eyy)
    rad = np.sqrt((0.5 * (exx - eyy))**2 + exy**2)
    return mean - rad, mean + rad


def build_material_field(disc, region_spec: Mapping[int, Material]):
    """Evaluate region materials at the nodes of every element."""
    mesh = disc.mesh
    shape = disc.x.shape
    fields = {name: np.empty(shape) for name in ("eps_xx", "eps_xy", "eps_yy", "mu")}
    tags = np.unique(mesh.regions)
    missing = [int(t) for t in tags if int(t) not in region_spec]
    if missing:
        raise MaterialError(f"no material given for region tag(s) {missing}")
    for tag in tags:
        sel = mesh.regions == tag
        mat = region_spec[int(tag)]
        x, y = disc.x[sel], disc.y[sel]
        for name in fields:
            fields[name][sel] = _evaluate(getattr(mat, name), x, y)

    exx, exy, eyy, mu = (fields[n] for n in ("eps_xx", "eps_xy", "eps_yy", "mu"))
    for name, arr in fields.items():
        if not np.all(np.isfinite(arr)):
            k, i = np.argwhere(~np.isfinite(arr))[0]
            raise MaterialError(f"non-finite {name} at element {k}, node {i}", int(k), int(i))
    det = exx * eyy - exy**2
    bad = (exx <= 0) | (eyy <= 0) | (det <= 0)
    if bad.any():
        k, i = np.argwhere(bad)[0]
        raise MaterialError(
            f"permittivity is not positive definite at element {k}, node {i}: "
            f"eps=[[{exx[k, i]:g}, {exy[k, i]:g}], [{exy[k, i]:g}, {eyy[k, i]:g}]]",
            int(k), int(i))
    if (mu <= 0).any():
        k, i = np.argwhere(mu <= 0)[0]
        raise MaterialError(f"non-positive permeability at element {k}, node {i}", int(k), int(i))

    lo, hi = eigen_bounds(exx, exy, eyy)
    for arr in fields.values():
        arr.setflags(write=False)
    return MaterialField(exx, exy, eyy, mu, float(lo.min()), float(hi.max()),
                         float(mu.min()), float(mu.max()))


def effective_permittivity(eps, n):
    """det(eps) / (n^T eps n) for a symmetric 2x2 tensor and unit normal."""
    eps = np.asarray(eps, dtype=float)
    n = np.asarray(n, dtype=float)
    value = _effective(eps[..., 0, 0], eps[..., 0, 1], eps[..., 1, 1], n[..., 0], n[..., 1])
    if np.any(value <= 0):
        raise MaterialError("effective permittivity is not positive; tensor is invalid")
    return value if value.ndim else float(value)


def _effective(exx, exy, eyy, nx, ny):
    det = exx * eyy - exy**2
    quad = nx * nx * exx + 2 * nx * ny * exy + ny * ny * eyy
    return det / quad


def face_impedances(material, disc):
    """Wave speed, impedance and conductance on each side of every face."""
    fn = disc.ops.face_nodes
    avg = {name: getattr(material, name)[:, fn].mean(axis=2)
           for name in ("eps_xx", "eps_xy", "eps_yy", "mu")}
    normals = disc.mesh.normals
    eps_eff = _effective(avg["eps_xx"], avg["eps_xy"], avg["eps_yy"],
                         normals[..., 0], normals[..., 1])
    if np.any(eps_eff <= 0):
        raise MaterialError("non-positive effective permittivity on a face")
    c = 1.0 / np.sqrt(avg["mu"] * eps_eff)
    Z = avg["mu"] * c
    Y = 1.0 / Z

    mesh = disc.mesh
    Z_ext = Z.copy()
    interior = ~disc.boundary
    ks, fs = np.nonzero(interior)
    Z_ext[ks, fs] = Z[mesh.neighbors[ks, fs], mesh.neighbor_faces[ks, fs]]
    Y_ext = 1.0 / Z_ext
    return ImpedanceMap(c, Z, Y, Z_ext, Y_ext)
