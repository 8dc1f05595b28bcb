"""Quadrature rules on the reference interval and reference triangle.

The reference triangle is {(r, s): r >= -1, s >= -1, r + s <= 0} (area 2).
"""

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi


@lru_cache(maxsize=None)
def gauss_legendre(npoints):
    """Gauss-Legendre points and weights on [-1, 1], exact to degree 2n-1."""
    x, w = leggauss(npoints)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def triangle_quadrature(degree):
    """Collapsed (Duffy) Gauss rule on the reference triangle.

    Returns ``(r, s, w)`` integrating polynomials of total degree ``degree``
    exactly. Weights sum to 2.
    """
    n = max(1, (degree + 2) // 2)
    a, wa = leggauss(n)
    # weight (1 - b) absorbs the Duffy jacobian
    b, wb = roots_jacobi(n, 1.0, 0.0)
    A, B = np.meshgrid(a, b, indexing="ij")
    r = 0.5 * (1.0 + A) * (1.0 - B) - 1.0
    s = B
    w = 0.5 * np.outer(wa, wb)
    r, s, w = r.ravel(), s.ravel(), w.ravel()
    for arr in (r, s, w):
        arr.setflags(write=False)
    return r, s, w
