"""Lagrange basis in time on [0, 1] and piecewise polynomial time functions.

Polynomials are coefficient tuples of :class:`fractions.Fraction`, constant
term first, so the local matrices are exact before conversion to floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np


# exact polynomial helpers ---------------------------------------------------

def padd(a, b):
    n = max(len(a), len(b))
    a = list(a) + [Fraction(0)] * (n - len(a))
    b = list(b) + [Fraction(0)] * (n - len(b))
    return ptrim([x + y for x, y in zip(a, b)])


def pscale(a, c):
    return ptrim([c * x for x in a])


def psub(a, b):
    return padd(a, pscale(b, Fraction(-1)))


def pmul(a, b):
    if not a or not b:
        return (Fraction(0),)
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return ptrim(out)


def pderiv(a):
    return ptrim([i * a[i] for i in range(1, len(a))]) if len(a) > 1 else (Fraction(0),)


def pint01(a):
    return sum((c / (i + 1) for i, c in enumerate(a)), Fraction(0))


def peval(a, x):
    acc = Fraction(0) if isinstance(x, Fraction) else 0 * x
    for c in reversed(a):
        acc = acc * x + c
    return acc


def ptrim(a):
    a = list(a)
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return tuple(a) if a else (Fraction(0),)


def pdegree(a):
    a = ptrim(a)
    return -1 if a == (Fraction(0),) else len(a) - 1


# Lagrange basis -------------------------------------------------------------

def lagrange_nodes(q):
    """Nodes j/q; for q = 0 the single node sits at s = 1 so U_q = u^-."""
    if q == 0:
        return (Fraction(1),)
    return tuple(Fraction(j, q) for j in range(q + 1))


@lru_cache(maxsize=None)
def lagrange_polys(q):
    nodes = lagrange_nodes(q)
    polys = []
    for l, sl in enumerate(nodes):
        p = (Fraction(1),)
        for i, si in enumerate(nodes):
            if i != l:
                p = pmul(p, (-si / (sl - si), Fraction(1) / (sl - si)))
        polys.append(p)
    return tuple(polys)


@dataclass(frozen=True, eq=False)
class TemporalBasis:
    """Local matrices of one dG(q) interval after mapping to s in [0, 1].

    ``D[j, l] = int psi_l' psi_j``, ``Q[j, l] = int psi_l psi_j``,
    ``e0[j] = psi_j(0)``, ``e1[j] = psi_j(1)``. Exact versions keep Fractions.
    """

    q: int
    nodes: np.ndarray
    D: np.ndarray
    Q: np.ndarray
    e0: np.ndarray
    e1: np.ndarray
    D_exact: tuple
    Q_exact: tuple
    e0_exact: tuple
    polys: tuple
    _coef: np.ndarray
    _dcoef: np.ndarray

    @property
    def size(self):
        return self.q + 1

    def values(self, s):
        """psi_l(s), shape (len(s), q+1)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.polynomial.polynomial.polyval(s, self._coef).T

    def derivatives(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.polynomial.polynomial.polyval(s, self._dcoef).T


@lru_cache(maxsize=None)
def local_temporal_matrices(q):
    if not 0 <= q <= 6:
        raise ValueError(f"temporal degree must be in 0..6, got {q}")
    polys = lagrange_polys(q)
    n = q + 1
    D = tuple(tuple(pint01(pmul(pderiv(polys[l]), polys[j])) for l in range(n)) for j in range(n))
    Q = tuple(tuple(pint01(pmul(polys[l], polys[j])) for l in range(n)) for j in range(n))
    e0 = tuple(peval(p, Fraction(0)) for p in polys)
    e1 = tuple(peval(p, Fraction(1)) for p in polys)

    coef = np.zeros((n, n))
    dcoef = np.zeros((n, n))
    for l, p in enumerate(polys):
        coef[: len(p), l] = [float(c) for c in p]
        dp = pderiv(p)
        dcoef[: len(dp), l] = [float(c) for c in dp]

    def arr(x):
        a = np.array(x, dtype=float)
        a.setflags(write=False)
        return a

    return TemporalBasis(
        q=q, nodes=arr([float(s) for s in lagrange_nodes(q)]),
        D=arr([[float(x) for x in row] for row in D]),
        Q=arr([[float(x) for x in row] for row in Q]),
        e0=arr([float(x) for x in e0]), e1=arr([float(x) for x in e1]),
        D_exact=D, Q_exact=Q, e0_exact=e0, polys=polys, _coef=coef, _dcoef=dcoef)


class PiecewisePolynomialTimeFunction:
    """Degree-q polynomial in time on each I_m, stored by Lagrange node values.

    ``coeffs`` has shape ``(M, q+1, *value_shape)``; the value shape may be
    empty (scalars), a coefficient vector, or samples at spatial points.
    """

    def __init__(self, partition, q, coeffs):
        coeffs = np.asarray(coeffs)
        if coeffs.shape[:2] != (partition.M, q + 1):
            raise ValueError(
                f"coefficient shape {coeffs.shape} does not match (M={partition.M}, q+1={q + 1})")
        self.partition = partition
        self.q = q
        self.coeffs = coeffs

    @property
    def basis(self):
        return local_temporal_matrices(self.q)

    def interval_value(self, m, s):
        """Values on I_m at local coordinates s (1-based m); shape (len(s), ...)."""
        psi = self.basis.values(s)
        return np.tensordot(psi, self.coeffs[m - 1], axes=(1, 0))

    def interval_derivative(self, m, s):
        k = self.partition.steps[m - 1]
        dpsi = self.basis.derivatives(s)
        return np.tensordot(dpsi, self.coeffs[m - 1], axes=(1, 0)) / k

    def __call__(self, t):
        m = self.partition.locate(t)
        a, b = self.partition.interval(m)
        return self.interval_value(m, [(t - a) / (b - a)])[0]

    def derivative(self):
        """Time derivative, exactly represented in the same degree-q basis."""
        nodes = self.basis.nodes
        dpsi = self.basis.derivatives(nodes)  # (q+1 nodes, q+1 basis)
        k = self.partition.steps.reshape((-1,) + (1,) * (self.coeffs.ndim - 1))
        d = np.einsum("il,ml...->mi...", dpsi, self.coeffs) / k
        return PiecewisePolynomialTimeFunction(self.partition, self.q, d)

    def map_values(self, op):
        """Apply a linear map to every stored coefficient (e.g. Delta_h)."""
        M, n = self.coeffs.shape[:2]
        flat = self.coeffs.reshape(M * n, *self.coeffs.shape[2:])
        mapped = np.stack([op(c) for c in flat])
        return PiecewisePolynomialTimeFunction(
            self.partition, self.q, mapped.reshape(M, n, *mapped.shape[1:]))

    def __sub__(self, other):
        if other.partition is not self.partition and not np.array_equal(
                other.partition.nodes, self.partition.nodes):
            raise ValueError("partitions differ")
        if other.q != self.q:
            raise ValueError("degrees differ")
        return PiecewisePolynomialTimeFunction(self.partition, self.q, self.coeffs - other.coeffs)
