"""Error norms, convergence-rate fits, energy and scattered intensity."""

import csv
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .quadrature import triangle_quadrature

CSV_COLUMNS = ("h", "dt", "N", "alpha", "scheme", "err_Ex", "err_Ey", "err_Hz")
FIELDS = ("Ex", "Ey", "Hz")


@dataclass
class ErrorRecord:
    h: float
    dt: float
    N: int
    alpha: int
    scheme: str
    err_Ex: float
    err_Ey: float
    err_Hz: float

    def error(self, field):
        return getattr(self, f"err_{field}")

    def as_row(self):
        d = asdict(self)
        return [d[c] if not isinstance(d[c], float) else repr(d[c]) for c in CSV_COLUMNS]


@dataclass
class RateEstimate:
    slope: float
    intercept: float
    residual: float
    samples: int


@lru_cache(maxsize=None)
def _error_quadrature(order):
    r, s, w = triangle_quadrature(2 * order + 2)
    from .reference import build_reference_operators
    interp = build_reference_operators(order).interpolation_matrix(r, s)
    return r, s, w, interp


def quadrature_points(disc):
    """Physical over-integration points (K, Nq) and weights including the jacobian."""
    r, s, w, interp = _error_quadrature(disc.order)
    verts = disc.mesh.vertices[disc.mesh.triangles]
    lr, ls = 0.5 * (r + 1), 0.5 * (s + 1)
    xq = verts[:, 0, 0, None] + np.outer(verts[:, 1, 0] - verts[:, 0, 0], lr) \
        + np.outer(verts[:, 2, 0] - verts[:, 0, 0], ls)
    yq = verts[:, 0, 1, None] + np.outer(verts[:, 1, 1] - verts[:, 0, 1], lr) \
        + np.outer(verts[:, 2, 1] - verts[:, 0, 1], ls)
    wq = disc.mesh.jacobians[:, None] * w[None, :]
    return xq, yq, wq, interp


def l2_error(disc, state, exact, t_E, t_H):
    """Over-integrated L2 errors of (Ex, Ey) at ``t_E`` and Hz at ``t_H``.

    ``exact(x, y, t)`` returns the three exact fields.
    """
    xq, yq, wq, interp = quadrature_points(disc)
    Ex, Ey, _ = exact(xq, yq, t_E)
    _, _, Hz = exact(xq, yq, t_H)
    out = {}
    for name, num, ref in (("Ex", state.Ex, Ex), ("Ey", state.Ey, Ey), ("Hz", state.Hz, Hz)):
        diff = num @ interp.T - ref
        out[name] = float(np.sqrt(np.sum(wq * diff**2)))
    return out


def l2_norm_quadrature(disc, values_fn):
    """Over-integrated L2 norm of a pointwise function f(x, y)."""
    xq, yq, wq, _ = quadrature_points(disc)
    return float(np.sqrt(np.sum(wq * np.asarray(values_fn(xq, yq))**2)))


def fit_rate(records, axis="h", field="Ex"):
    """Least-squares slope of log(error) against log(h) or log(dt)."""
    if len(records) < 3:
        raise ValueError(f"a rate needs at least 3 records, got {len(records)}")
    xs = np.array([getattr(r, axis) for r in records], dtype=float)
    es = np.array([r.error(field) if hasattr(r, "error") else r for r in records], dtype=float)
    if not np.all(np.isfinite(es)) or np.any(es <= 0):
        raise ValueError(f"errors must be positive and finite: {es.tolist()}")
    if not np.all(xs > 0) or len(np.unique(xs)) != len(xs):
        raise ValueError(f"{axis} values must be positive and distinct: {xs.tolist()}")
    return fit_power_law(xs, es)


def fit_power_law(xs, ys):
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    residual = float(np.sqrt(res[0])) if len(res) else 0.0
    return RateEstimate(float(coef[0]), float(coef[1]), residual, len(xs))


def discrete_energy(op, state):
    return op.energy(state)


def intensity(state):
    """Pointwise magnitude of the (scattered) electric field at the nodes."""
    return np.hypot(state.Ex, state.Ey)


def write_error_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(r.as_row())


def write_rates_csv(rates, path):
    """``rates`` maps (label, field) to RateEstimate."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("label", "field", "slope", "intercept", "residual", "samples"))
        for (label, fld), est in rates.items():
            w.writerow((label, fld, repr(est.slope), repr(est.intercept),
                        repr(est.residual), est.samples))


def region_max(disc, values, mask_fn):
    """Largest nodal value among nodes where ``mask_fn(x, y)`` holds (0 if none)."""
    mask = np.asarray(mask_fn(disc.x, disc.y), dtype=bool)
    return float(values[mask].max()) if mask.any() else 0.0


def localized_maxima(disc, values, centers, inner=0.15, outer=0.24):
    """For each center, whether the maximum over the disk of radius ``outer``
    is attained within ``inner`` of the center.

    Returns a list of (is_localized, argmax_distance, max_value).
    """
    out = []
    for cx, cy in centers:
        d = np.hypot(disc.x - cx, disc.y - cy)
        near = d < outer
        if not near.any():
            out.append((False, float("inf"), 0.0))
            continue
        vals = np.where(near, values, -np.inf)
        i = np.unravel_index(np.argmax(vals), vals.shape)
        out.append((bool(d[i] <= inner), float(d[i]), float(values[i])))
    return out
