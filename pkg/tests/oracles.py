"""Independent reference computations used by the tests.

Nothing here goes through the solver's basis, nodes or quadrature: nodal
fields are turned into monomial polynomials by fitting in physical
coordinates, and integrals use tensor Gauss-Legendre rules mapped onto the
triangle through the collapsed (Duffy) coordinates.
"""

import numpy as np


def monomial_exponents(N):
    return [(a, b) for a in range(N + 1) for b in range(N + 1 - a)]


class PhysicalPolynomial:
    """Degree-N polynomial in (x, y) through given nodal values."""

    def __init__(self, N, x, y, values):
        self.exps = monomial_exponents(N)
        # centre and scale for conditioning
        self.cx, self.cy = np.mean(x), np.mean(y)
        self.s = max(np.ptp(x), np.ptp(y))
        A = self._basis(x, y)
        self.coef = np.linalg.solve(A, values)

    def _basis(self, x, y):
        X, Y = (np.asarray(x) - self.cx) / self.s, (np.asarray(y) - self.cy) / self.s
        return np.stack([X**a * Y**b for a, b in self.exps], axis=-1)

    def __call__(self, x, y):
        return self._basis(x, y) @ self.coef

    def grad(self, x, y):
        X, Y = (np.asarray(x) - self.cx) / self.s, (np.asarray(y) - self.cy) / self.s
        dx = np.stack([a * X**max(a - 1, 0) * Y**b if a else 0 * X for a, b in self.exps], -1)
        dy = np.stack([b * X**a * Y**max(b - 1, 0) if b else 0 * X for a, b in self.exps], -1)
        return dx @ self.coef / self.s, dy @ self.coef / self.s


def triangle_rule(verts, n=12):
    """Points and weights of an n x n collapsed Gauss rule on a physical triangle."""
    g, w = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (g + 1)
    wu = 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    W = np.outer(wu, wu)
    # (u, v) in the unit square -> barycentric (l1, l2) = (u (1 - v), v)
    l1, l2 = U * (1 - V), V
    jac = 1 - V
    v0, v1, v2 = verts
    x = v0[0] + l1 * (v1[0] - v0[0]) + l2 * (v2[0] - v0[0])
    y = v0[1] + l1 * (v1[1] - v0[1]) + l2 * (v2[1] - v0[1])
    area2 = abs((v1[0] - v0[0]) * (v2[1] - v0[1]) - (v1[1] - v0[1]) * (v2[0] - v0[0]))
    return x.ravel(), y.ravel(), (W * jac).ravel() * area2


def segment_rule(a, b, n=12):
    g, w = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (g + 1)
    a, b = np.asarray(a, float), np.asarray(b, float)
    L = np.linalg.norm(b - a)
    pts = a[None] + t[:, None] * (b - a)[None]
    return pts[:, 0], pts[:, 1], 0.5 * w * L


def effective_eps(eps, n):
    eps = np.asarray(eps, float)
    return np.linalg.det(eps) / (n @ eps @ n)


def dense_rhs(vertices, triangles, N, node_xy, Ex, Ey, Hz, eps_tensors, mu, alpha):
    """Weak right-hand sides of the three update equations by dense quadrature.

    ``node_xy[k]`` holds the (Np, 2) physical nodes of element k, the fields
    are (K, Np) nodal values, ``eps_tensors[k]`` is the constant 2x2 tensor
    and ``mu[k]`` the constant permeability of element k. Jumps are taken
    between the two polynomials evaluated at the same physical point; faces
    are matched by shared vertex pairs and boundary faces use alpha = 1 with
    the jump equal to the interior value and Z+ = Z-.
    """
    K = len(triangles)
    Np = node_xy.shape[1]
    poly = {}
    for name, F in (("Ex", Ex), ("Ey", Ey), ("Hz", Hz)):
        poly[name] = [PhysicalPolynomial(N, node_xy[k, :, 0], node_xy[k, :, 1], F[k])
                      for k in range(K)]
    tests = [[PhysicalPolynomial(N, node_xy[k, :, 0], node_xy[k, :, 1], np.eye(Np)[i])
              for i in range(Np)] for k in range(K)]

    edges = {}
    for k, tri in enumerate(triangles):
        for f in range(3):
            a, b = tri[f], tri[(f + 1) % 3]
            edges.setdefault(frozenset((a, b)), []).append((k, a, b))

    Rx = np.zeros((K, Np))
    Ry = np.zeros((K, Np))
    Rz = np.zeros((K, Np))
    for k, tri in enumerate(triangles):
        x, y, w = triangle_rule(vertices[tri])
        Hx, Hy = poly["Hz"][k].grad(x, y)
        Exx, Exy = poly["Ex"][k].grad(x, y)
        Eyx, Eyy = poly["Ey"][k].grad(x, y)
        for i in range(Np):
            phi = tests[k][i](x, y)
            Rx[k, i] += np.sum(w * Hy * phi)
            Ry[k, i] += np.sum(w * -Hx * phi)
            Rz[k, i] += np.sum(w * (Exy - Eyx) * phi)

        for f in range(3):
            a, b = tri[f], tri[(f + 1) % 3]
            va, vb = vertices[a], vertices[b]
            t = vb - va
            n = np.array([t[1], -t[0]]) / np.linalg.norm(t)
            Zm = mu[k] / np.sqrt(mu[k] * effective_eps(eps_tensors[k], n))
            others = [e for e in edges[frozenset((a, b))] if e[0] != k]
            fx, fy, fw = segment_rule(va, vb)
            own = {nm: poly[nm][k](fx, fy) for nm in poly}
            if others:
                kk = others[0][0]
                Zp = mu[kk] / np.sqrt(mu[kk] * effective_eps(eps_tensors[kk], -n))
                jump = {nm: own[nm] - poly[nm][kk](fx, fy) for nm in poly}
                af = alpha
            else:
                Zp = Zm
                jump = own
                af = 1.0
            Ym, Yp = 1 / Zm, 1 / Zp
            cross = n[0] * jump["Ey"] - n[1] * jump["Ex"]
            e_flux = (Zp * jump["Hz"] - af * cross) / (Zp + Zm)
            h_flux = (Yp * cross - af * jump["Hz"]) / (Yp + Ym)
            for i in range(Np):
                phi = tests[k][i](fx, fy)
                Rx[k, i] += np.sum(fw * -n[1] * e_flux * phi)
                Ry[k, i] += np.sum(fw * n[0] * e_flux * phi)
                Rz[k, i] += np.sum(fw * h_flux * phi)
    return Rx, Ry, Rz


def dense_weighted_mass(vertices, tri, N, node_xy, weight_fn):
    """(w phi_j, phi_i) on one element by dense quadrature."""
    Np = node_xy.shape[0]
    x, y, w = triangle_rule(vertices[tri], n=16)
    phis = np.stack([PhysicalPolynomial(N, node_xy[:, 0], node_xy[:, 1], np.eye(Np)[i])(x, y)
                     for i in range(Np)])
    return (phis * (w * weight_fn(x, y))) @ phis.T


def fd_derivative(f, h=1e-3):
    """Fourth-order central difference of a scalar function of one variable."""
    def d(z):
        return (-f(z + 2 * h) + 8 * f(z + h) - 8 * f(z - h) + f(z - 2 * h)) / (12 * h)
    return d
