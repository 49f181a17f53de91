"""Rational functions describing one dG(q) step, derived exactly.

For the scalar problem u' + lam u = f on one interval with z = k lam, the
local system is K(z) U = e0 U_in + k F with K(z) = (D + e0 e0^T) + z Q.
Hence

    U_l = r_{l,0}(z) U_in + k sum_j r_{l,j}(z) F_j,

with r_{l,0} = (K^{-1} e0)_l and r_{l,j} = (K^{-1})_{lj}. Cramer's rule gives
every r as a numerator over the common denominator det K(z), normalized so
that the denominator equals 1 at z = 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .stepper import DgSolution
from .timebasis import local_temporal_matrices, padd, pdegree, peval, pmul, pscale, ptrim

HOMOG = "homog"


class PoleError(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class RationalFamily:
    q: int
    p_hat: tuple
    p_homog: tuple
    p_force: tuple

    def to_dict(self):
        def fmt(p):
            return [str(c) for c in p]
        return {
            "q": self.q,
            "p_hat": fmt(self.p_hat),
            "p_homog": [fmt(p) for p in self.p_homog],
            "p_force": [[fmt(p) for p in row] for row in self.p_force],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data):
        def parse(p):
            return tuple(Fraction(c) for c in p)
        return cls(
            q=int(data["q"]),
            p_hat=parse(data["p_hat"]),
            p_homog=tuple(parse(p) for p in data["p_homog"]),
            p_force=tuple(tuple(parse(p) for p in row) for row in data["p_force"]),
        )

    def numerator(self, l, j=HOMOG):
        return self.p_homog[l] if j == HOMOG else self.p_force[l][j]

    def denominator_roots(self):
        coeffs = [float(c) for c in self.p_hat]
        return np.roots(coeffs[::-1])


def _det(mat):
    """Determinant of a small matrix of exact polynomials by cofactor expansion."""
    n = len(mat)
    if n == 1:
        return mat[0][0]
    total = (Fraction(0),)
    for col in range(n):
        minor = [row[:col] + row[col + 1:] for row in mat[1:]]
        term = pmul(mat[0][col], _det(minor))
        total = padd(total, term if col % 2 == 0 else pscale(term, Fraction(-1)))
    return total


def _adjugate(mat):
    n = len(mat)
    if n == 1:
        return [[(Fraction(1),)]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for r, row in enumerate(mat) if r != i]
            c = _det(minor)
            adj[j][i] = c if (i + j) % 2 == 0 else pscale(c, Fraction(-1))
    return adj


def local_matrix_polynomial(q):
    """K(z) = (D + e0 e0^T) + z Q as a matrix of exact degree-1 polynomials."""
    b = local_temporal_matrices(q)
    n = q + 1
    return [[ptrim((b.D_exact[j][l] + b.e0_exact[j] * b.e0_exact[l], b.Q_exact[j][l]))
             for l in range(n)] for j in range(n)]


def derive_family(q):
    if q < 0:
        raise ValueError("q must be nonnegative")
    K = local_matrix_polynomial(q)
    det = _det(K)
    adj = _adjugate(K)
    e0 = local_temporal_matrices(q).e0_exact
    d0 = det[0]
    n = q + 1
    p_hat = pscale(det, 1 / d0)
    p_force = tuple(tuple(pscale(adj[l][j], 1 / d0) for j in range(n)) for l in range(n))
    p_homog = []
    for l in range(n):
        acc = (Fraction(0),)
        for j in range(n):
            acc = padd(acc, pscale(p_force[l][j], e0[j]))
        p_homog.append(acc)
    fam = RationalFamily(q, p_hat, tuple(p_homog), p_force)
    assert pdegree(fam.p_hat) == q + 1
    return fam


def _horner(coeffs, z):
    acc = np.zeros_like(z, dtype=complex) if isinstance(z, np.ndarray) else 0j
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def evaluate(fam, l, j, z):
    """r_{l,j}(z) (``j="homog"`` for r_{l,0}); z may be an array."""
    num = [float(c) for c in fam.numerator(l, j)]
    den = [float(c) for c in fam.p_hat]
    z_arr = np.asarray(z, dtype=complex)
    d = _horner(den, z_arr)
    if np.any(np.abs(d) < 1e-14):
        raise PoleError(f"denominator vanishes at z={z}")
    out = _horner(num, z_arr) / d
    if np.ndim(z) == 0:
        out = complex(out)
        return out.real if np.isrealobj(z) else out
    return out.real if np.isrealobj(z) else out


def evaluate_exact(fam, l, j, z):
    """Exact value at a rational point."""
    z = Fraction(z)
    return peval(fam.numerator(l, j), z) / peval(fam.p_hat, z)


def pade_defect(fam, lam, dps=60):
    """|r_{q,0}(lam) - exp(-lam)| in extended precision."""
    with mpmath.workdps(dps):
        x = mpmath.mpf(lam)
        num = mpmath.mpf(0)
        for c in reversed(fam.p_homog[fam.q]):
            num = num * x + mpmath.mpf(c.numerator) / c.denominator
        den = mpmath.mpf(0)
        for c in reversed(fam.p_hat):
            den = den * x + mpmath.mpf(c.numerator) / c.denominator
        return abs(num / den - mpmath.exp(-x))


def pade_defect_order(fam, lo=1e-3, hi=1e-1, npts=12):
    """Least-squares slope of log|r_{q,0}(lam) - e^{-lam}| against log lam.

    The defect is evaluated with 60-digit arithmetic: for q >= 2 it lies far
    below double precision on this range.
    """
    lams = np.logspace(np.log10(lo), np.log10(hi), npts)
    defects = [pade_defect(fam, lam) for lam in lams]
    if all(d < mpmath.mpf("1e-300") for d in defects):
        raise ArithmeticError("Pade defect vanishes to working precision")
    logs = np.array([float(mpmath.log(d)) for d in defects])
    slope, _ = np.polyfit(np.log(lams), logs, 1)
    return float(slope)


def stability_profile(fam, samples):
    samples = np.asarray(samples, dtype=float)
    if samples.min() != 0.0 or samples.max() < 1e6:
        raise ValueError("samples must include 0 and a value >= 1e6")
    vals = np.abs(evaluate(fam, fam.q, HOMOG, samples))
    return {"sup": float(vals.max()), "argsup": float(samples[np.argmax(vals)]),
            "tail": float(vals[np.argmax(samples)])}


def spectral_solve(pairs, partition, q, u0_modal=None, f_modal=None, space=None, family=None):
    """dG(q) solution assembled mode by mode from the scalar recursion.

    ``pairs = (lam, V)`` with M-orthonormal columns. ``u0_modal`` holds the
    eigen-coefficients of P_h u0 (``V.T @ M @ u0``); ``f_modal`` the moments
    in the eigenbasis, shape (M, q+1, N) (``V.T @ F`` for load vectors F).
    """
    lam, V = pairs
    lam = np.asarray(lam, dtype=float)
    N = len(lam)
    if V.shape[1] != N or V.shape[0] != N or (space is not None and space.ndof != N):
        raise ValueError("spectral oracle needs the complete eigenbasis")
    fam = family or derive_family(q)
    n = q + 1
    c = np.zeros(N) if u0_modal is None else np.asarray(u0_modal, dtype=float)
    modal = np.zeros((partition.M, n, N))
    cache = {}
    for m, k in enumerate(partition.steps):
        key = float(k)
        if key not in cache:
            z = k * lam
            homog = np.array([evaluate(fam, l, HOMOG, z) for l in range(n)])
            force = np.array([[evaluate(fam, l, j, z) for j in range(n)] for l in range(n)])
            cache[key] = (homog, force)
        homog, force = cache[key]
        modal[m] = homog * c
        if f_modal is not None:
            modal[m] += k * np.einsum("ljn,jn->ln", force, f_modal[m])
        c = modal[m, -1]
    coeffs = modal @ V.T
    initial = None if u0_modal is None else V @ np.asarray(u0_modal, dtype=float)
    return DgSolution(partition, space, q, coeffs, initial)
