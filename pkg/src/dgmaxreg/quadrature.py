"""Gauss rules on the unit interval and on the reference triangle."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_unit(npts):
    """Gauss-Legendre nodes and weights on [0, 1], exact to degree 2*npts-1."""
    x, w = np.polynomial.legendre.leggauss(npts)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def points_for_degree(degree):
    return max(1, degree // 2 + 1)


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Collapsed (Duffy) Gauss rule on the triangle (0,0),(1,0),(0,1).

    Returns barycentric-free reference coordinates ``(npts, 2)`` and weights
    summing to 1/2. Exact for polynomials of total degree ``degree``.
    """
    n = points_for_degree(degree + 1)
    u, wu = gauss_unit(n)
    v, wv = gauss_unit(n)
    U, V = np.meshgrid(u, v, indexing="ij")
    WU, WV = np.meshgrid(wu, wv, indexing="ij")
    # (u, v) in the unit square -> (x, y) = (u, v(1-u)), jacobian (1-u)
    x = U.ravel()
    y = (V * (1.0 - U)).ravel()
    w = (WU * WV * (1.0 - U)).ravel()
    pts = np.column_stack([x, y])
    pts.setflags(write=False)
    w.setflags(write=False)
    return pts, w
