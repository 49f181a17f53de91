"""Manufactured heat-equation problems u_t - Delta u = f with u = 0 on the boundary."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy

PI = np.pi


@dataclass(frozen=True)
class ManufacturedProblem:
    id: str
    dim: int
    u: Callable          # (t, x[n, d]) -> (n,)
    u_t: Callable
    grad_u: Callable     # (t, x[n, d]) -> (n, d)
    f: Callable
    symbolic: sympy.Expr | None = field(default=None, repr=False, compare=False)
    tags: tuple = ()
    # optional u = a(t) phi(x): (a, phi, grad_phi); lets projections be computed once
    separable: tuple | None = field(default=None, repr=False, compare=False)

    def u0(self, x):
        return self.u(0.0, x)

    def spot_check(self, npts=20, seed=0):
        """Max |f - (u_t - Delta u)| at random points, derivatives taken symbolically."""
        if self.symbolic is None:
            return 0.0
        t, x, y = sympy.symbols("t x y")
        coords = (x, y)[: self.dim]
        u = self.symbolic
        residual = sympy.diff(u, t) - sum(sympy.diff(u, c, 2) for c in coords)
        res_fn = sympy.lambdify((t, *coords), residual, "numpy")
        rng = np.random.default_rng(seed)
        T = rng.uniform(0, 1, npts)
        X = rng.uniform(0, 1, (npts, self.dim))
        worst = 0.0
        for ti, xi in zip(T, X):
            want = float(res_fn(ti, *xi))
            got = float(self.f(ti, xi[None, :])[0])
            worst = max(worst, abs(want - got))
        return worst


class _LastPoints:
    """Remembers phi(x) for the most recent point array (compared by value).

    The (points, values) pair is swapped in as one tuple so threads never see
    values from a different point set.
    """

    def __init__(self, phi):
        self.phi = phi
        self.last = None

    def __call__(self, x):
        last = self.last
        if last is not None and (last[0] is x or (
                np.shape(x) == last[0].shape and np.array_equal(last[0], x))):
            return last[1]
        xs = np.array(x, dtype=float)
        val = self.phi(xs)
        self.last = (xs, val)
        return val


def sin_exp_1d():
    phi = _LastPoints(lambda x: np.sin(PI * x[:, 0]))

    def u(t, x):
        return phi(x) * np.exp(-t)

    def u_t(t, x):
        return -u(t, x)

    def grad_u(t, x):
        return (PI * np.cos(PI * x[:, 0]) * np.exp(-t))[:, None]

    def f(t, x):
        return (PI**2 - 1.0) * u(t, x)

    t, xs = sympy.symbols("t x")
    expr = sympy.sin(sympy.pi * xs) * sympy.exp(-t)
    sep = (lambda t: np.exp(-t), lambda x: np.sin(PI * x[:, 0]),
           lambda x: (PI * np.cos(PI * x[:, 0]))[:, None])
    return ManufacturedProblem("sin_exp_1d", 1, u, u_t, grad_u, f, expr, ("smooth",), sep)


def sin_exp_2d():
    phi = _LastPoints(lambda x: np.sin(PI * x[:, 0]) * np.sin(PI * x[:, 1]))

    def u(t, x):
        return phi(x) * np.exp(-t)

    def u_t(t, x):
        return -u(t, x)

    def grad_u(t, x):
        e = np.exp(-t)
        sx, sy = np.sin(PI * x[:, 0]), np.sin(PI * x[:, 1])
        cx, cy = np.cos(PI * x[:, 0]), np.cos(PI * x[:, 1])
        return np.column_stack([PI * cx * sy * e, PI * sx * cy * e])

    def f(t, x):
        return (2 * PI**2 - 1.0) * u(t, x)

    t, xs, ys = sympy.symbols("t x y")
    expr = sympy.sin(sympy.pi * xs) * sympy.sin(sympy.pi * ys) * sympy.exp(-t)

    def grad_phi(x):
        sx, sy = np.sin(PI * x[:, 0]), np.sin(PI * x[:, 1])
        cx, cy = np.cos(PI * x[:, 0]), np.cos(PI * x[:, 1])
        return np.column_stack([PI * cx * sy, PI * sx * cy])

    sep = (lambda t: np.exp(-t), lambda x: np.sin(PI * x[:, 0]) * np.sin(PI * x[:, 1]), grad_phi)
    return ManufacturedProblem("sin_exp_2d", 2, u, u_t, grad_u, f, expr, ("smooth",), sep)


def discrete_steady_1d(space):
    """Interpolant of sin(pi x) on a 1D P1 space, constant in time.

    Its source is -Delta_h of the interpolant, so the discrete solution
    reproduces it up to round-off; convergence slopes are meaningless.
    """
    if space.dim != 1 or space.degree != 1:
        raise ValueError("discrete_steady_1d needs a 1D P1 space")
    from ..spatial import apply_discrete_laplacian

    nodes = space.dof_coords[:, 0]
    order = np.argsort(nodes)
    vals = space.extend(space.interpolate(lambda x: np.sin(PI * x[:, 0])))
    fvals = space.extend(-apply_discrete_laplacian(space, vals[space.interior]))

    def u(t, x):
        return np.interp(x[:, 0], nodes[order], vals[order])

    def u_t(t, x):
        return np.zeros(len(x))

    def grad_u(t, x):
        xs, vs = nodes[order], vals[order]
        idx = np.clip(np.searchsorted(xs, x[:, 0], side="right") - 1, 0, len(xs) - 2)
        return ((vs[idx + 1] - vs[idx]) / (xs[idx + 1] - xs[idx]))[:, None]

    def f(t, x):
        return np.interp(x[:, 0], nodes[order], fvals[order])

    return ManufacturedProblem("discrete_steady_1d", 1, u, u_t, grad_u, f, None, ("discrete",))


PROBLEMS = {"sin_exp_1d": sin_exp_1d, "sin_exp_2d": sin_exp_2d}


def get_problem(name):
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; known: {sorted(PROBLEMS)}") from None
