"""Nodal basis data on the reference triangle.

The reference triangle has vertices (-1, -1), (1, -1), (-1, 1). Faces are
numbered 0: s = -1, 1: r + s = 0, 2: r = -1, each traversed
counterclockwise. The modal basis is the orthonormal Koornwinder-Dubiner
family; nodes are warp-and-blend nodes (equispaced for N <= 2).
"""

from dataclasses import dataclass
from functools import lru_cache
from math import gamma, sqrt

import numpy as np

from .errors import ReferenceElementError

NODE_TOL = 1e-12
MAX_ORDER = 12

# optimized blending parameters for warp-and-blend nodes, indexed by N - 1
_ALPHA_OPT = (0.0000, 0.0000, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999,
              1.2832, 1.3648, 1.4773, 1.4959, 1.5743, 1.5770, 1.6223, 1.6258)


# {{{ 1D orthogonal polynomials

def jacobi_p(x, alpha, beta, n):
    """Orthonormal Jacobi polynomial P_n^(alpha, beta) evaluated at x."""
    x = np.asarray(x, dtype=float)
    gamma0 = (2.0**(alpha + beta + 1) / (alpha + beta + 1)
              * gamma(alpha + 1) * gamma(beta + 1) / gamma(alpha + beta + 1))
    p_prev = np.full_like(x, 1.0 / sqrt(gamma0))
    if n == 0:
        return p_prev
    gamma1 = (alpha + 1) * (beta + 1) / (alpha + beta + 3) * gamma0
    p = ((alpha + beta + 2) * x / 2 + (alpha - beta) / 2) / sqrt(gamma1)
    if n == 1:
        return p

    a_old = 2 / (2 + alpha + beta) * sqrt((alpha + 1) * (beta + 1) / (alpha + beta + 3))
    for i in range(1, n):
        h1 = 2 * i + alpha + beta
        a_new = 2 / (h1 + 2) * sqrt(
            (i + 1) * (i + 1 + alpha + beta) * (i + 1 + alpha) * (i + 1 + beta)
            / (h1 + 1) / (h1 + 3))
        b_new = -(alpha**2 - beta**2) / (h1 * (h1 + 2))
        p_prev, p = p, (-a_old * p_prev + (x - b_new) * p) / a_new
        a_old = a_new
    return p


def grad_jacobi_p(x, alpha, beta, n):
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.zeros_like(x)
    return sqrt(n * (n + alpha + beta + 1)) * jacobi_p(x, alpha + 1, beta + 1, n - 1)


def jacobi_gauss_lobatto(alpha, beta, n):
    """Gauss-Lobatto points of order n (n + 1 points including +-1)."""
    if n == 1:
        return np.array([-1.0, 1.0])
    if n == 2:
        return np.array([-1.0, 0.0, 1.0])
    from scipy.special import roots_jacobi
    interior, _ = roots_jacobi(n - 1, alpha + 1, beta + 1)
    return np.concatenate([[-1.0], np.sort(interior), [1.0]])


def vandermonde_1d(n, x):
    return np.stack([jacobi_p(x, 0, 0, j) for j in range(n + 1)], axis=1)

# }}}


# {{{ nodes

def _warp_factor(n, rout):
    lgl = jacobi_gauss_lobatto(0, 0, n)
    req = np.linspace(-1.0, 1.0, n + 1)
    veq = vandermonde_1d(n, req)
    pmat = np.stack([jacobi_p(rout, 0, 0, i) for i in range(n + 1)])
    lmat = np.linalg.solve(veq.T, pmat)
    warp = lmat.T @ (lgl - req)
    interior = np.abs(rout) < 1.0 - 1e-10
    sf = 1.0 - (interior * rout)**2
    return warp / sf + warp * (interior - 1)


def equilateral_nodes(n):
    """Warp-and-blend nodes on the equilateral triangle."""
    alpha = _ALPHA_OPT[n - 1] if n < 16 else 5.0 / 3.0
    l1, l3 = [], []
    for i in range(n + 1):
        for j in range(n + 1 - i):
            l1.append(i / n)
            l3.append(j / n)
    l1 = np.array(l1)
    l3 = np.array(l3)
    l2 = 1.0 - l1 - l3
    x = -l2 + l3
    y = (-l2 - l3 + 2 * l1) / sqrt(3.0)

    blend1 = 4 * l2 * l3
    blend2 = 4 * l1 * l3
    blend3 = 4 * l1 * l2
    warp1 = blend1 * _warp_factor(n, l3 - l2) * (1 + (alpha * l1)**2)
    warp2 = blend2 * _warp_factor(n, l1 - l3) * (1 + (alpha * l2)**2)
    warp3 = blend3 * _warp_factor(n, l2 - l1) * (1 + (alpha * l3)**2)

    x = x + warp1 + np.cos(2 * np.pi / 3) * warp2 + np.cos(4 * np.pi / 3) * warp3
    y = y + np.sin(2 * np.pi / 3) * warp2 + np.sin(4 * np.pi / 3) * warp3
    return x, y


def equilateral_to_rs(x, y):
    l1 = (sqrt(3.0) * y + 1.0) / 3.0
    l2 = (-3.0 * x - sqrt(3.0) * y + 2.0) / 6.0
    l3 = (3.0 * x - sqrt(3.0) * y + 2.0) / 6.0
    return -l2 + l3 - l1, -l2 - l3 + l1

# }}}


# {{{ 2D modal basis

def rs_to_ab(r, s):
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    a = np.full_like(r, -1.0)
    mask = np.abs(s - 1.0) > 1e-14
    a[mask] = 2 * (1 + r[mask]) / (1 - s[mask]) - 1
    return a, s


def mode_indices(n):
    return [(i, j) for i in range(n + 1) for j in range(n + 1 - i)]


def simplex_p(a, b, i, j):
    h1 = jacobi_p(a, 0, 0, i)
    h2 = jacobi_p(b, 2 * i + 1, 0, j)
    return sqrt(2.0) * h1 * h2 * (1 - b)**i


def grad_simplex_p(a, b, i, j):
    fa = jacobi_p(a, 0, 0, i)
    dfa = grad_jacobi_p(a, 0, 0, i)
    gb = jacobi_p(b, 2 * i + 1, 0, j)
    dgb = grad_jacobi_p(b, 2 * i + 1, 0, j)
    half = 0.5 * (1 - b)

    dr = dfa * gb
    if i > 0:
        dr = dr * half**(i - 1)

    ds = dfa * (gb * 0.5 * (1 + a))
    if i > 0:
        ds = ds * half**(i - 1)
    tmp = dgb * half**i
    if i > 0:
        tmp = tmp - 0.5 * i * gb * half**(i - 1)
    ds = ds + fa * tmp

    scale = 2.0**(i + 0.5)
    return scale * dr, scale * ds


def vandermonde_2d(n, r, s):
    """V[q, m] = phi_m(r_q, s_q) for the orthonormal simplex basis."""
    a, b = rs_to_ab(r, s)
    return np.stack([simplex_p(a, b, i, j) for i, j in mode_indices(n)], axis=1)


def grad_vandermonde_2d(n, r, s):
    a, b = rs_to_ab(r, s)
    cols = [grad_simplex_p(a, b, i, j) for i, j in mode_indices(n)]
    vr = np.stack([c[0] for c in cols], axis=1)
    vs = np.stack([c[1] for c in cols], axis=1)
    return vr, vs

# }}}


@dataclass(frozen=True, eq=False)
class ReferenceOperators:
    order: int
    r: np.ndarray
    s: np.ndarray
    V: np.ndarray
    Vinv: np.ndarray
    Dr: np.ndarray
    Ds: np.ndarray
    M: np.ndarray
    face_nodes: np.ndarray   # (3, Nfp) indices into the nodal vector
    face_coords: np.ndarray  # (3, Nfp) 1D parameter in [-1, 1] along each face
    face_mass: np.ndarray    # (3, Nfp, Nfp) 1D mass matrices, parameter length 2
    lift: np.ndarray         # (Np, 3 * Nfp)

    @property
    def Np(self):
        return len(self.r)

    @property
    def Nfp(self):
        return self.order + 1

    def interpolation_matrix(self, r, s):
        """Matrix evaluating a nodal vector at arbitrary reference points."""
        return vandermonde_2d(self.order, r, s) @ self.Vinv

    def weighted_mass(self, weight):
        """Reference mass matrices weighted by nodal values of ``weight``.

        ``weight`` has shape (..., Np); its P_N interpolant is integrated
        exactly (rule of degree 3N). Returns shape (..., Np, Np).
        """
        rq, sq, wq = _weighted_mass_rule(self)
        interp = self.interpolation_matrix(rq, sq)
        wvals = np.asarray(weight) @ interp.T * wq
        return np.einsum("qi,...q,qj->...ij", interp, wvals, interp, optimize=True)


def _weighted_mass_rule(ops):
    from .quadrature import triangle_quadrature
    return triangle_quadrature(3 * ops.order)


def _face_parameter(face, r, s):
    # arclength-ordered coordinate in [-1, 1] following the counterclockwise traversal
    if face == 0:
        return r
    if face == 1:
        return s
    return -s


@lru_cache(maxsize=None)
def build_reference_operators(order):
    """Build and cache the reference operators for polynomial degree ``order``."""
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= MAX_ORDER:
        raise ReferenceElementError(
            f"polynomial degree must be an integer in [1, {MAX_ORDER}], got {order!r}")
    order = int(order)

    r, s = equilateral_to_rs(*equilateral_nodes(order))
    V = vandermonde_2d(order, r, s)
    Vinv = np.linalg.inv(V)
    vr, vs = grad_vandermonde_2d(order, r, s)
    Dr = vr @ Vinv
    Ds = vs @ Vinv
    M = Vinv.T @ Vinv
    M = 0.5 * (M + M.T)

    on_face = (np.abs(s + 1) < NODE_TOL, np.abs(r + s) < NODE_TOL, np.abs(r + 1) < NODE_TOL)
    face_nodes = []
    face_coords = []
    for f, mask in enumerate(on_face):
        idx = np.flatnonzero(mask)
        t = _face_parameter(f, r[idx], s[idx])
        order_idx = np.argsort(t)
        face_nodes.append(idx[order_idx])
        face_coords.append(t[order_idx])
    face_nodes = np.array(face_nodes)
    face_coords = np.array(face_coords)
    if face_nodes.shape != (3, order + 1):
        raise ReferenceElementError("face node detection failed")

    Nfp = order + 1
    face_mass = np.empty((3, Nfp, Nfp))
    emat = np.zeros((len(r), 3 * Nfp))
    for f in range(3):
        v1 = vandermonde_1d(order, face_coords[f])
        m1 = np.linalg.inv(v1 @ v1.T)
        face_mass[f] = m1
        emat[face_nodes[f], f * Nfp:(f + 1) * Nfp] = m1
    lift = V @ (V.T @ emat)

    for arr in (r, s, V, Vinv, Dr, Ds, M, face_nodes, face_coords, face_mass, lift):
        arr.setflags(write=False)
    return ReferenceOperators(order, r, s, V, Vinv, Dr, Ds, M, face_nodes,
                              face_coords, face_mass, lift)
