"""Temporal projection pi_k and L^s(I; L^p) norms of space-time functions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .quadrature import gauss_unit
from .stepper import DgSolution, jump
from .timebasis import PiecewisePolynomialTimeFunction, lagrange_polys, peval, pint01, pmul

INF = math.inf

# doubling check for L^s time integrals
_ACCEPT_RTOL = 1e-6
_MAX_BISECTIONS = 3


def parse_exponent(x):
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinity", "∞"):
            return INF
        x = float(x)
    x = float(x)
    if not x >= 1:
        raise ValueError(f"exponent must be >= 1 or 'inf', got {x!r}")
    return x


@dataclass(frozen=True)
class NormSpec:
    """Exponents s (time) and p (space) of L^s(I; L^p(Omega))."""

    s: float = 2.0
    p: float = 2.0
    time_points: int | None = None
    mode: str = "quadrature"

    def __post_init__(self):
        object.__setattr__(self, "s", parse_exponent(self.s))
        object.__setattr__(self, "p", parse_exponent(self.p))
        if self.mode not in ("quadrature", "lumped"):
            raise ValueError(f"unknown spatial norm mode {self.mode!r}")


# pi_k -----------------------------------------------------------------------

@lru_cache(maxsize=None)
def _pi_k_matrix(q):
    """Rows 0..q-1: moments int psi_l s^i; row q: endpoint value psi_l(1)."""
    polys = lagrange_polys(q)
    n = q + 1
    G = np.zeros((n, n))
    for i in range(q):
        mono = (Fraction(0),) * i + (Fraction(1),)
        for l in range(n):
            G[i, l] = float(pint01(pmul(polys[l], mono)))
    for l in range(n):
        G[q, l] = float(peval(polys[l], Fraction(1)))
    return G


def project_pi_k(u, partition, q, npts=None):
    """pi_k u: endpoint interpolation at t_m^- plus q moment conditions per interval.

    ``u(t)`` may return a scalar or an array (e.g. samples at spatial points).
    """
    G = _pi_k_matrix(q)
    cond = np.linalg.cond(G)
    if cond > 1e10:
        raise ArithmeticError(f"pi_k system ill-conditioned (cond={cond:.2e})")
    s, w = gauss_unit(npts or 2 * q + 6)
    out = []
    for m in range(1, partition.M + 1):
        a, b = partition.interval(m)
        k = b - a
        samples = np.stack([np.asarray(u(a + k * si), dtype=float) for si in s])
        rhs = np.empty((q + 1,) + samples.shape[1:])
        for i in range(q):
            rhs[i] = np.tensordot(w * s**i, samples, axes=(0, 0))
        rhs[q] = np.asarray(u(b), dtype=float)
        flat = rhs.reshape(q + 1, -1)
        out.append(np.linalg.solve(G, flat).reshape(rhs.shape))
    return PiecewisePolynomialTimeFunction(partition, q, np.stack(out))


# samplers -------------------------------------------------------------------

class _Sampler:
    """Absolute values of g(t) at spatial quadrature points for t in I_m."""

    def __init__(self, partition, evaluate, weights, q=None):
        self.partition = partition
        self.evaluate = evaluate   # (m, s array) -> (abs values (ns, ...), extra (ns, K) | None)
        self.weights = weights
        self.q = q

    def norms(self, m, s, p):
        vals, extra = self.evaluate(m, np.asarray(s, dtype=float))
        ns = len(s)
        vals = np.asarray(vals).reshape(ns, -1)
        if math.isinf(p):
            out = vals.max(axis=1, initial=0.0)
            if extra is not None and np.size(extra):
                out = np.maximum(out, np.asarray(extra).reshape(ns, -1).max(axis=1))
            return out
        w = np.asarray(self.weights).reshape(-1)
        return (vals**p @ w) ** (1.0 / p)


def _space_sampler(space, g, partition, q, mode):
    if mode == "lumped":
        w = space.lumped_weights

        def evaluate(m, s):
            return np.abs(g.interval_value(m, s)), None
        return _Sampler(partition, evaluate, w, q)
    rule = space.norm_rule()

    def evaluate(m, s):
        coeffs = g.interval_value(m, s)
        return np.abs(space.evaluate(coeffs, rule)), np.abs(coeffs)
    return _Sampler(partition, evaluate, rule.weights, q)


def _sampler_for(g, space=None, partition=None, mode="quadrature"):
    if isinstance(g, _Sampler):
        return g
    if isinstance(g, DgSolution):
        space = space or g.space
    if isinstance(g, PiecewisePolynomialTimeFunction):
        partition = g.partition
        if g.coeffs.ndim == 2:
            def evaluate(m, s):
                return np.abs(g.interval_value(m, s))[:, None], None
            return _Sampler(partition, evaluate, np.ones(1), g.q)
        if space is None:
            raise ValueError("a space is needed for vector-valued time functions")
        return _space_sampler(space, g, partition, g.q, mode)
    if callable(g):
        if partition is None:
            raise ValueError("a partition is needed for callables")

        def evaluate(m, s):
            a, b = partition.interval(m)
            vals = [np.asarray(g(a + (b - a) * si), dtype=float) for si in s]
            if space is None:
                return np.abs(np.array(vals)).reshape(len(s), 1), None
            rule = space.norm_rule()
            coeffs = np.stack(vals)
            return np.abs(space.evaluate(coeffs, rule)), np.abs(coeffs)
        w = np.ones(1) if space is None else space.norm_rule().weights
        return _Sampler(partition, evaluate, w, None)
    raise TypeError(f"cannot take a space-time norm of {type(g).__name__}")


def _integrate_interval(sampler, m, spec, npts, k):
    """int_{I_m} |g|_p^s dt by Gauss rules with a doubling check and bisection."""
    s_exp, p = spec.s, spec.p

    def gauss(a, b, n):
        x, w = gauss_unit(n)
        vals = sampler.norms(m, a + (b - a) * x, p)
        return (b - a) * k * float(np.sum(w * vals**s_exp))

    def rec(a, b, level):
        coarse = gauss(a, b, npts)
        fine = gauss(a, b, 2 * npts)
        if abs(fine - coarse) <= _ACCEPT_RTOL * abs(fine) or level >= _MAX_BISECTIONS:
            return fine
        mid = 0.5 * (a + b)
        return rec(a, mid, level + 1) + rec(mid, b, level + 1)

    return rec(0.0, 1.0, 0)


def interval_sup(sampler, m, spec, npts):
    x, _ = gauss_unit(npts)
    pts = np.concatenate([[0.0], x, [1.0]])
    return float(sampler.norms(m, pts, spec.p).max())


def spacetime_norm(g, spec, space=None, partition=None, intervals=None):
    """||g||_{L^s(I; L^p)}; ``intervals`` restricts the sum/max to those m.

    ``g`` is a DgSolution, a PiecewisePolynomialTimeFunction (scalar or
    coefficient valued) or a callable of t. For s = inf the sup is sampled
    at Gauss nodes plus both interval endpoints (one-sided limits).
    """
    sampler = _sampler_for(g, space, partition, spec.mode)
    part = sampler.partition
    q = sampler.q if sampler.q is not None else 1
    npts = spec.time_points or q + 3
    ms = intervals if intervals is not None else range(1, part.M + 1)
    if math.isinf(spec.s):
        return max((interval_sup(sampler, m, spec, npts) for m in ms), default=0.0)
    total = sum(_integrate_interval(sampler, m, spec, npts, part.steps[m - 1]) for m in ms)
    return float(total ** (1.0 / spec.s))


def interval_sup_norms(g, spec, space=None):
    """Array of ||g||_{L^inf(I_m; L^p)} for every m."""
    sampler = _sampler_for(g, space, None, spec.mode)
    q = sampler.q if sampler.q is not None else 1
    npts = spec.time_points or q + 3
    return np.array([interval_sup(sampler, m, spec, npts)
                     for m in range(1, sampler.partition.M + 1)])


def jump_norms(sol, p, convention, mode="quadrature"):
    """||[u]_{m-1} / k_m||_{L^p} for m = 1..M."""
    from .spatial import lp_norm
    k = sol.partition.steps
    return np.array([lp_norm(sol.space, jump(sol, m, convention), p, mode) / k[m - 1]
                     for m in range(1, sol.partition.M + 1)])


def jump_functional(sol, spec, convention="homogeneous"):
    """(sum_m k_m ||[u]_{m-1}/k_m||_p^s)^{1/s}, or the max over m for s = inf."""
    vals = jump_norms(sol, spec.p, convention, spec.mode)
    if math.isinf(spec.s):
        return float(vals.max(initial=0.0))
    return float(np.sum(sol.partition.steps * vals**spec.s) ** (1.0 / spec.s))


def error_norm(u_exact, sol, spec, intervals=None):
    """||u - u_kh||_{L^s(I; L^p)} with u sampled at spatial quadrature points."""
    space = sol.space
    rule = space.norm_rule()
    nc, nq, d = rule.points.shape
    pts = rule.points.reshape(-1, d)
    dof_pts = space.interior_coords

    sup = math.isinf(spec.p)

    def evaluate(m, s):
        a, b = sol.partition.interval(m)
        coeffs = sol.interval_value(m, s)
        uh = space.evaluate(coeffs, rule)
        out = np.empty_like(uh)
        extra = np.empty_like(coeffs) if sup else None
        for i, si in enumerate(s):
            t = a + (b - a) * si
            out[i] = np.abs(np.asarray(u_exact(t, pts)).reshape(nc, nq) - uh[i])
            if sup:
                extra[i] = np.abs(np.asarray(u_exact(t, dof_pts)) - coeffs[i])
        return out, extra

    sampler = _Sampler(sol.partition, evaluate, rule.weights, sol.q)
    return spacetime_norm(sampler, spec, intervals=intervals)


def sampled_norm(space, partition, values, spec, q=None):
    """L^s(I; L^p) norm of a function given by its values at quadrature points.

    ``values(t)`` returns the (signed) values at ``space.norm_rule()`` points
    (shape (cells, points)); ``q`` sets the default Gauss order as for dG
    functions of that degree.
    """
    rule = space.norm_rule()

    def evaluate(m, s):
        a, b = partition.interval(m)
        return np.abs(np.stack([np.asarray(values(a + (b - a) * si)) for si in s])), None

    return spacetime_norm(_Sampler(partition, evaluate, rule.weights, q), spec)


def function_norm(space, partition, f, spec, q=None):
    """L^s(I; L^p) norm of a space-time callable ``f(t, x[n, d])``."""
    rule = space.norm_rule()
    nc, nq, d = rule.points.shape
    pts = rule.points.reshape(-1, d)
    return sampled_norm(space, partition,
                        lambda t: np.asarray(f(t, pts), dtype=float).reshape(nc, nq), spec, q)
