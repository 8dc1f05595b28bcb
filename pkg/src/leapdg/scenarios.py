"""Model problems: the manufactured anisotropic solution and retinal scattering.

Each scenario knows its geometry (region tags and materials), its initial
data and how to produce nodal source terms for the time loop.
"""

from dataclasses import dataclass, field
from math import pi

import numpy as np

from .materials import Material


class NodalSources:
    """Source terms evaluated at the nodes of a discretization.

    Both terms are represented as ``cos(w t) A + sin(w t) B`` with nodal
    coefficient arrays, which covers every time dependence used here.
    """

    def __init__(self, omega, electric_cos, electric_sin, magnetic_cos, magnetic_sin):
        self.omega = omega
        self._e = (electric_cos, electric_sin)
        self._h = (magnetic_cos, magnetic_sin)

    def electric(self, t):
        (cx, cy), (sx, sy) = self._e
        c, s = np.cos(self.omega * t), np.sin(self.omega * t)
        return c * cx + s * sx, c * cy + s * sy

    def magnetic(self, t):
        if self._h[0] is None:
            return None
        c, s = np.cos(self.omega * t), np.sin(self.omega * t)
        return c * self._h[0] + s * self._h[1]


# {{{ manufactured solution

def eps_xx(x, y):
    return 4 * x**2 + y**2 + 1


def eps_yy(x, y):
    return x**2 + 1 + 0 * y


def eps_xy(x, y):
    return np.sqrt(x**2 + y**2)


def _det(x, y):
    # eps_xy^2 = x^2 + y^2 keeps the determinant smooth
    return eps_xx(x, y) * eps_yy(x, y) - (x**2 + y**2)


def _amp_x(x, y):
    return np.sqrt(eps_yy(x, y) / _det(x, y))


def _amp_y(x, y):
    return np.sqrt(eps_xx(x, y) / _det(x, y))


def _damp_x_dy(x, y):
    # d/dy sqrt(eps_yy / det), eps_yy independent of y, d det/dy = 2 y x^2
    det = _det(x, y)
    return -eps_yy(x, y) * y * x**2 / (_amp_x(x, y) * det**2)


def _damp_y_dx(x, y):
    det = _det(x, y)
    ddet = 8 * x * (x**2 + 1) + 2 * x * eps_xx(x, y) - 2 * x
    return (8 * x * det - eps_xx(x, y) * ddet) / (2 * _amp_y(x, y) * det**2)


def manufactured_exact(x, y, t):
    st = np.sin(pi * t)
    Ex = -_amp_x(x, y) * st * np.sin(pi * x)
    Ey = _amp_y(x, y) * st * np.sin(pi * y)
    Hz = st * np.sin(pi * x * y) + 0 * x
    return Ex, Ey, Hz


def manufactured_sources(x, y, t):
    """(S_x, S_y, S_H): residual of the exact solution in the TE system (mu = 1)."""
    st, ct = np.sin(pi * t), pi * np.cos(pi * t)
    sx, sy, sxy = np.sin(pi * x), np.sin(pi * y), np.sin(pi * x * y)
    cxy = np.cos(pi * x * y)
    ax, ay = _amp_x(x, y), _amp_y(x, y)
    dEx_dt = -ax * sx * ct
    dEy_dt = ay * sy * ct
    dHz_dt = sxy * ct
    dHz_dx = st * pi * y * cxy
    dHz_dy = st * pi * x * cxy
    dEy_dx = st * _damp_y_dx(x, y) * sy
    dEx_dy = -st * _damp_x_dy(x, y) * sx
    exx, exy, eyy = eps_xx(x, y), eps_xy(x, y), eps_yy(x, y)
    Sx = exx * dEx_dt + exy * dEy_dt - dHz_dy
    Sy = exy * dEx_dt + eyy * dEy_dt + dHz_dx
    SH = dHz_dt + dEy_dx - dEx_dy
    return Sx, Sy, SH


@dataclass(frozen=True)
class ManufacturedScenario:
    name: str = "manufactured"
    has_exact: bool = True
    # feed the exact solution's traces to the absorbing boundary as incoming data;
    # without it the exact fields do not satisfy the boundary condition
    boundary_data: bool = True

    def region_fn(self, x, y):
        return np.zeros(np.shape(x), dtype=np.int64)

    def materials(self):
        return {0: Material(eps_xx, eps_yy, eps_xy, 1.0)}

    def exact(self, x, y, t):
        return manufactured_exact(x, y, t)

    def initial_fields(self, x, y):
        return self.exact(x, y, 0.0)

    def bind_sources(self, disc, material=None, op=None):
        # every source is a combination of cos(pi t) and sin(pi t)
        x, y = disc.x, disc.y
        c = manufactured_sources(x, y, 0.0)
        s = list(manufactured_sources(x, y, 0.5))
        if self.boundary_data and op is not None:
            # the exact fields are sin(pi t) times a spatial profile
            traces = self.exact(disc.traces(x), disc.traces(y), 0.5)
            for i, b in enumerate(op.boundary_data_sources(*traces)):
                s[i] = s[i] + b
        return NodalSources(pi, (c[0], c[1]), (s[0], s[1]), c[2], s[2])

# }}}


# {{{ scattered field

@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    radius: float

    def contains(self, x, y):
        return (x - self.cx)**2 + (y - self.cy)**2 < self.radius**2


GEOMETRIES = {
    "one_circle": (Circle(0.0, 0.0, 0.5),),
    "three_circles": (Circle(0.0, 0.5, 0.1), Circle(0.0, 0.0, 0.1), Circle(0.0, -0.5, 0.1)),
    "none": (),
}


def scenario_geometry(name):
    """Circles of a named scattering geometry."""
    try:
        return GEOMETRIES[name]
    except KeyError:
        raise ValueError(f"unknown geometry {name!r}; choose from {sorted(GEOMETRIES)}") from None


def incident_field(x, y, t, wavenumber=10.0):
    """Plane wave travelling in +x: (0, cos(k(x - t)), cos(k(x - t)))."""
    phase = np.cos(wavenumber * (x - t)) + 0 * y
    return np.zeros_like(phase), phase, phase.copy()


def incident_time_derivative(x, y, t, wavenumber=10.0):
    d = wavenumber * np.sin(wavenumber * (x - t)) + 0 * y
    return np.zeros_like(d), d, d.copy()


@dataclass(frozen=True)
class ScatteringScenario:
    geometry: str = "one_circle"
    circles: tuple = None
    eps_inside: float = 1.2
    eps_background: float = 1.0
    mu: float = 1.0
    mu_background: float = 1.0
    wavenumber: float = 10.0
    has_exact: bool = False
    name: str = field(default="scatter")

    def __post_init__(self):
        if self.circles is None:
            object.__setattr__(self, "circles", scenario_geometry(self.geometry))

    def inside(self, x, y):
        mask = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        for c in self.circles:
            mask |= c.contains(x, y)
        return mask

    def region_fn(self, x, y):
        return self.inside(x, y).astype(np.int64)

    def materials(self):
        return {0: Material.isotropic(self.eps_background, self.mu_background),
                1: Material.isotropic(self.eps_inside, self.mu)}

    def initial_fields(self, x, y):
        z = np.zeros(np.shape(x))
        return z, z.copy(), z.copy()

    def sources(self, x, y, t):
        """(P, Q, R) at points; material taken from the circle predicate."""
        inside = self.inside(x, y)
        exx = np.where(inside, self.eps_inside, self.eps_background)
        mu = np.where(inside, self.mu, self.mu_background)
        return _scattering_sources(exx, 0.0 * exx, exx, mu, self, x, y, t)

    def bind_sources(self, disc, material, op=None):
        k = self.wavenumber
        x = disc.x
        # d/dt cos(k(x - t)) = k sin(kx) cos(kt) - k cos(kx) sin(kt)
        dc = k * np.sin(k * x)
        ds = -k * np.cos(k * x)
        ei = self.eps_background
        P_c = -material.eps_xy * dc
        P_s = -material.eps_xy * ds
        Q_c = (ei - material.eps_yy) * dc
        Q_s = (ei - material.eps_yy) * ds
        dmu = self.mu_background - material.mu
        if np.any(dmu != 0):
            R_c, R_s = dmu * dc, dmu * ds
        else:
            R_c = R_s = None
        return NodalSources(k, (P_c, Q_c), (P_s, Q_s), R_c, R_s)


def _scattering_sources(exx, exy, eyy, mu, sc, x, y, t):
    dEx, dEy, dHz = incident_time_derivative(x, y, t, sc.wavenumber)
    P = (sc.eps_background - exx) * dEx - exy * dEy
    Q = -exy * dEx + (sc.eps_background - eyy) * dEy
    R = (sc.mu_background - mu) * dHz
    return P, Q, R


def scattering_sources(x, y, t, scenario):
    return scenario.sources(x, y, t)

# }}}


def make_scenario(name, **params):
    if name == "manufactured":
        return ManufacturedScenario()
    if name in ("one_circle", "three_circles", "none"):
        circles = params.pop("circles", None)
        if circles is not None:
            circles = tuple(Circle(*c) if not isinstance(c, Circle) else c for c in circles)
        return ScatteringScenario(geometry=name, circles=circles, **params)
    raise ValueError(f"unknown scenario {name!r}")
