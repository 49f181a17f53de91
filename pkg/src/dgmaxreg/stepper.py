"""dG(q) in time x cG(r) in space solver for the heat equation.

On each interval I_m the coefficients U_0..U_q (values at the Lagrange nodes
s_l = l/q) solve the block system

    sum_l [(D_jl + e0_j e0_l) M + k_m Q_jl A] U_l = e0_j M U_in + k_m F_j,

with U_in = P_h u0 for m = 1 and U_in = U^{m-1}_q afterwards, and F_j the
load vector of the time moment f^m_j = 1/k_m int_{I_m} f psi_j dt.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .quadrature import gauss_unit
from .spatial import l2_project
from .timebasis import PiecewisePolynomialTimeFunction, local_temporal_matrices

__all__ = [
    "DgSolution", "SolverError", "local_temporal_matrices", "rhs_moments", "all_moments",
    "dg_step", "dg_solve", "evaluate_state", "jump", "bilinear_primal", "bilinear_dual",
    "galerkin_rhs", "random_discrete_function",
]


class SolverError(RuntimeError):
    pass


class DgSolution(PiecewisePolynomialTimeFunction):
    """Member of X_kh: ``coeffs[m-1, l]`` is U^m_l over interior dofs."""

    def __init__(self, partition, space, q, coeffs, initial=None):
        super().__init__(partition, q, coeffs)
        self.space = space
        N = self.coeffs.shape[-1]
        self.has_initial = initial is not None
        self.initial = np.zeros(N) if initial is None else np.asarray(initial)

    def u_minus(self, m):
        """u^-_m = U^m_q (m >= 1); u^-_0 is the discrete initial value."""
        return self.initial if m == 0 else self.coeffs[m - 1, -1]

    def u_plus(self, m):
        """u^+_m = U^{m+1}_0."""
        return self.coeffs[m, 0]

    def laplacian(self):
        """Delta_h applied to every coefficient, as a time function."""
        M, n, N = self.coeffs.shape
        flat = self.coeffs.reshape(M * n, N).T
        out = -self.space.solve_mass(self.space.stiffness @ flat)
        return PiecewisePolynomialTimeFunction(self.partition, self.q, out.T.reshape(M, n, N))


def rhs_moments(space, f, m, partition, basis):
    """Load vectors of f^m_j, j = 0..q, shape (q+1, N)."""
    a, b = partition.interval(m)
    k = b - a
    s, w = gauss_unit(basis.q + 3)
    psi = basis.values(s)
    rule = space.cell_rule(space.degree + 2)
    nc, nq, d = rule.points.shape
    pts = rule.points.reshape(-1, d)
    out = np.zeros((basis.size, space.ndof))
    for g in range(len(s)):
        vals = np.asarray(f(a + k * s[g], pts), dtype=float).reshape(nc, nq)
        out += np.outer(w[g] * psi[g], space.load_values(vals, rule))
    return out


def all_moments(space, f, partition, q):
    basis = local_temporal_matrices(q)
    return np.stack([rhs_moments(space, f, m, partition, basis)
                     for m in range(1, partition.M + 1)])


class _BlockSolver:
    """Factorized block systems, one per distinct step length."""

    def __init__(self, space, basis):
        self.space = space
        self.basis = basis
        self.left = basis.D + np.outer(basis.e0, basis.e0)
        self._cache = {}

    def matrix(self, k):
        return (sp.kron(sp.csr_matrix(self.left), self.space.mass)
                + k * sp.kron(sp.csr_matrix(self.basis.Q), self.space.stiffness)).tocsc()

    def factor(self, k):
        key = float(k)
        if key not in self._cache:
            K = self.matrix(k)
            self._cache[key] = (K, spla.splu(K))
        return self._cache[key]

    def step(self, k, U_in, F):
        n, N = self.basis.size, self.space.ndof
        K, lu = self.factor(k)
        rhs = np.outer(self.basis.e0, self.space.mass @ U_in).ravel()
        if F is not None:
            rhs = rhs + k * np.asarray(F).ravel()
        x = lu.solve(rhs)
        res = np.linalg.norm(K @ x - rhs)
        scale = np.linalg.norm(rhs)
        if res > 1e-10 * scale:
            raise SolverError(f"block residual {res:.3e} exceeds 1e-10 * |rhs| = {1e-10 * scale:.3e}")
        return x.reshape(n, N)


def dg_step(space, basis, k, U_in, F=None):
    """One dG(q) interval: returns U_l, shape (q+1, N)."""
    return _BlockSolver(space, basis).step(k, np.asarray(U_in, dtype=float), F)


def dg_solve(space, partition, q, u0=None, f=None, f_moments=None):
    """Sweep all intervals.

    ``u0`` may be None (zero), a callable (L2-projected) or an interior
    coefficient vector taken as P_h u0. The source is either a callable
    ``f(t, x)`` or precomputed load moments of shape (M, q+1, N).
    """
    basis = local_temporal_matrices(q)
    N = space.ndof
    if u0 is None:
        initial = None
        U_in = np.zeros(N)
    elif callable(u0):
        initial = l2_project(space, u0)
        U_in = initial
    else:
        initial = np.asarray(u0, dtype=float)
        U_in = initial
    if f is not None and f_moments is not None:
        raise ValueError("give either f or f_moments")
    if f is not None:
        f_moments = all_moments(space, f, partition, q)

    solver = _BlockSolver(space, basis)
    coeffs = np.zeros((partition.M, q + 1, N))
    steps = partition.steps
    for m in range(partition.M):
        F = None if f_moments is None else f_moments[m]
        coeffs[m] = solver.step(steps[m], U_in, F)
        U_in = coeffs[m, -1]
    return DgSolution(partition, space, q, coeffs, initial)


def evaluate_state(sol, what, t):
    """Value or time derivative of the solution at t in (0, T], right-continuous."""
    T = sol.partition.T
    if not 0.0 < t <= T:
        raise ValueError(f"t={t!r} outside (0, {T}]")
    m = sol.partition.locate(t)
    a, b = sol.partition.interval(m)
    s = [(t - a) / (b - a)]
    if what == "value":
        return sol.interval_value(m, s)[0]
    if what == "time_derivative":
        return sol.interval_derivative(m, s)[0]
    raise ValueError(f"unknown quantity {what!r}")


def jump(sol, m, convention="homogeneous"):
    """[u]_{m-1} seen from I_m, i.e. U^m_0 - U^{m-1}_q.

    For m = 1 the homogeneous convention subtracts P_h u0, the
    inhomogeneous one (u0 = 0) returns U^1_0.
    """
    if not 1 <= m <= sol.partition.M:
        raise IndexError(f"m={m} outside 1..{sol.partition.M}")
    if m >= 2:
        return sol.coeffs[m - 1, 0] - sol.coeffs[m - 2, -1]
    if convention == "homogeneous":
        return sol.coeffs[0, 0] - sol.initial
    if convention == "inhomogeneous":
        if sol.has_initial and np.any(sol.initial != 0):
            raise ValueError("inhomogeneous jump convention requires u0 = 0")
        return sol.coeffs[0, 0]
    raise ValueError(f"unknown jump convention {convention!r}")


# bilinear form ---------------------------------------------------------------

def bilinear_primal(space, partition, q, U, Phi):
    """B(u, phi) = sum_m <u_t, phi> + (grad u, grad phi) + jumps + (u^+_0, phi^+_0)."""
    basis = local_temporal_matrices(q)
    Mh, Ah = space.mass, space.stiffness
    total = 0.0
    for m in range(partition.M):
        k = partition.steps[m]
        MU = (Mh @ U[m].T).T
        AU = (Ah @ U[m].T).T
        # row j = test index, col l = trial index
        total += np.einsum("jl,jn,ln->", basis.D, Phi[m], MU)
        total += k * np.einsum("jl,jn,ln->", basis.Q, Phi[m], AU)
        up = U[m].T @ basis.e0
        phip = Phi[m].T @ basis.e0
        if m == 0:
            total += phip @ (Mh @ up)
        else:
            umin = U[m - 1].T @ basis.e1
            total += phip @ (Mh @ (up - umin))
    return float(total)


def bilinear_dual(space, partition, q, U, Phi):
    """B(u, phi) = -sum_m <u, phi_t> + (grad u, grad phi) - sum_{m<M} (u^-_m, [phi]_m) + (u^-_M, phi^-_M)."""
    basis = local_temporal_matrices(q)
    Mh, Ah = space.mass, space.stiffness
    total = 0.0
    M = partition.M
    for m in range(M):
        k = partition.steps[m]
        MPhi = (Mh @ Phi[m].T).T
        # int u phi_t : trial index l on u, derivative on phi_j -> D[l, j]
        total -= np.einsum("lj,ln,jn->", basis.D, U[m], MPhi)
        total += k * np.einsum("jl,jn,ln->", basis.Q, Phi[m], (Ah @ U[m].T).T)
        umin = U[m].T @ basis.e1
        phimin = Phi[m].T @ basis.e1
        if m < M - 1:
            phiplus = Phi[m + 1].T @ basis.e0
            total -= umin @ (Mh @ (phiplus - phimin))
        else:
            total += umin @ (Mh @ phimin)
    return float(total)


def galerkin_rhs(space, partition, q, Phi, f_moments=None, initial=None):
    """(f, phi) + (u0, phi^+_0) for a test function with coefficients Phi."""
    basis = local_temporal_matrices(q)
    total = 0.0
    if f_moments is not None:
        total += float(np.einsum("m,mjn,mjn->", partition.steps, f_moments, Phi))
    if initial is not None:
        total += float((Phi[0].T @ basis.e0) @ (space.mass @ initial))
    return total


def random_discrete_function(space, partition, q, rng):
    return rng.standard_normal((partition.M, q + 1, space.ndof))
