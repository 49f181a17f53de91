"""Conforming Lagrange finite elements on the unit interval and unit square.

Discrete functions are plain coefficient vectors over the interior
(non-Dirichlet) degrees of freedom. Homogeneous Dirichlet conditions are
imposed by eliminating boundary dofs, so ``mass`` and ``stiffness`` are SPD.
The discrete Laplacian is ``Delta_h = -M^{-1} A``; its spectrum lies on the
negative real axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .quadrature import gauss_unit, points_for_degree, triangle_rule


class CapabilityError(ValueError):
    """Requested (dimension, degree) combination is not provided."""


class NearSingularError(ArithmeticError):
    """Resolvent parameter sits on the spectrum of the discrete Laplacian."""


@dataclass(frozen=True)
class SpatialMesh:
    dim: int
    vertices: np.ndarray
    cells: np.ndarray

    @cached_property
    def cell_volumes(self):
        v = self.vertices[self.cells]
        if self.dim == 1:
            return np.abs(v[:, 1, 0] - v[:, 0, 0])
        e1 = v[:, 1] - v[:, 0]
        e2 = v[:, 2] - v[:, 0]
        return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def cell_diameters(self):
        v = self.vertices[self.cells]
        nloc = v.shape[1]
        d = np.zeros(len(self.cells))
        for a in range(nloc):
            for b in range(a + 1, nloc):
                d = np.maximum(d, np.linalg.norm(v[:, a] - v[:, b], axis=1))
        return d

    @property
    def h(self):
        return float(self.cell_diameters.max())

    @property
    def quasi_uniformity(self):
        """max over cells of h / |tau|^(1/d)."""
        return float(np.max(self.h / self.cell_volumes ** (1.0 / self.dim)))


def unit_interval_mesh(n):
    vertices = np.linspace(0.0, 1.0, n + 1)[:, None]
    cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return SpatialMesh(1, vertices, cells)


def unit_square_mesh(n):
    """Uniform right-triangle mesh, each square cut along its (0,0)-(1,1) diagonal."""
    x = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(x, x, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (n + 1) + j

    I, J = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    I, J = I.ravel(), J.ravel()
    lower = np.column_stack([vid(I, J), vid(I + 1, J), vid(I + 1, J + 1)])
    upper = np.column_stack([vid(I, J), vid(I + 1, J + 1), vid(I, J + 1)])
    cells = np.empty((2 * n * n, 3), dtype=int)
    cells[0::2] = lower
    cells[1::2] = upper
    return SpatialMesh(2, vertices, cells)


def _reference_basis(dim, degree, pts):
    """Values (nq, nloc) and reference gradients (nq, nloc, dim)."""
    if dim == 1:
        s = pts[:, 0]
        if degree == 1:
            vals = np.column_stack([1 - s, s])
            grads = np.stack([-np.ones_like(s), np.ones_like(s)], axis=1)[:, :, None]
        else:
            vals = np.column_stack([(1 - s) * (1 - 2 * s), s * (2 * s - 1), 4 * s * (1 - s)])
            grads = np.stack([4 * s - 3, 4 * s - 1, 4 - 8 * s], axis=1)[:, :, None]
        return vals, grads
    x, y = pts[:, 0], pts[:, 1]
    vals = np.column_stack([1 - x - y, x, y])
    g = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    grads = np.broadcast_to(g, (len(x), 3, 2)).copy()
    return vals, grads


def _reference_rule(dim, degree):
    if dim == 1:
        s, w = gauss_unit(points_for_degree(degree))
        return s[:, None], w
    return triangle_rule(degree)


@dataclass(frozen=True)
class _CellRule:
    """A quadrature rule mapped to every cell."""

    points: np.ndarray   # (nc, nq, d) physical points
    weights: np.ndarray  # (nc, nq) physical weights
    basis: np.ndarray    # (nq, nloc)
    grads: np.ndarray    # (nc, nq, nloc, d) physical gradients


@dataclass(frozen=True, eq=False)
class FeSpace:
    mesh: SpatialMesh
    degree: int
    dof_coords: np.ndarray   # all dofs, (ndof, d)
    cell_dofs: np.ndarray    # (nc, nloc)
    interior: np.ndarray     # indices of interior dofs
    mass: sp.csr_matrix = field(repr=False)
    stiffness: sp.csr_matrix = field(repr=False)
    lumped_weights: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return self.mesh.dim

    @property
    def h(self):
        return self.mesh.h

    @property
    def ndof(self):
        return len(self.interior)

    @property
    def interior_coords(self):
        return self.dof_coords[self.interior]

    def extend(self, v):
        """Interior coefficients -> coefficients over all dofs (zeros on boundary)."""
        v = np.asarray(v)
        full = np.zeros(v.shape[:-1] + (len(self.dof_coords),), dtype=v.dtype)
        full[..., self.interior] = v
        return full

    def cell_rule(self, degree):
        return _cell_rule(self, degree)

    def norm_rule(self):
        return self.cell_rule(self.degree + 2)

    def evaluate(self, v, rule):
        """Values of the FE function(s) at the rule points, shape (..., nc, nq)."""
        full = self.extend(v)
        local = full[..., self.cell_dofs]  # (..., nc, nloc)
        nloc = local.shape[-1]
        out = local.reshape(-1, nloc) @ rule.basis.T
        return out.reshape(local.shape[:-1] + (rule.basis.shape[0],))

    def evaluate_gradient(self, v, rule):
        full = self.extend(v)
        local = full[..., self.cell_dofs]
        return np.einsum("...ci,cqid->...cqd", local, rule.grads)

    def load(self, f, degree=None):
        """Vector ((f, phi_i))_i over interior dofs; f maps (npts, d) -> (npts,)."""
        rule = self.cell_rule(degree if degree is not None else 2 * self.degree + 2)
        nc, nq, d = rule.points.shape
        vals = np.asarray(f(rule.points.reshape(-1, d)), dtype=float).reshape(nc, nq)
        return self.load_values(vals, rule)

    def load_values(self, vals, rule):
        """Load vector from function values sampled at ``rule`` points."""
        local = (vals * rule.weights) @ rule.basis
        out = np.zeros(len(self.dof_coords), dtype=local.dtype)
        np.add.at(out, self.cell_dofs.ravel(), local.ravel())
        return out[self.interior]

    def gradient_load(self, grad_f, degree=None):
        """Vector ((grad f, grad phi_i))_i; grad_f maps (npts, d) -> (npts, d)."""
        rule = self.cell_rule(degree if degree is not None else 2 * self.degree + 2)
        nc, nq, d = rule.points.shape
        g = np.asarray(grad_f(rule.points.reshape(-1, d)), dtype=float).reshape(nc, nq, d)
        local = np.einsum("cqd,cq,cqid->ci", g, rule.weights, rule.grads)
        out = np.zeros(len(self.dof_coords))
        np.add.at(out, self.cell_dofs.ravel(), local.ravel())
        return out[self.interior]

    def interpolate(self, f):
        return np.asarray(f(self.interior_coords), dtype=float)

    @cached_property
    def _mass_lu(self):
        return spla.splu(self.mass.tocsc())

    @cached_property
    def _stiffness_lu(self):
        return spla.splu(self.stiffness.tocsc())

    def solve_mass(self, b):
        b = np.asarray(b)
        if np.iscomplexobj(b):
            return self._mass_lu.solve(b.real) + 1j * self._mass_lu.solve(b.imag)
        return self._mass_lu.solve(b)

    @cached_property
    def eigenvalues(self):
        return scipy.linalg.eigh(self.stiffness.toarray(), self.mass.toarray(),
                                 eigvals_only=True)


def _cell_rule(space, degree):
    cache = space.__dict__.setdefault("_rule_cache", {})
    if degree in cache:
        return cache[degree]
    mesh = space.mesh
    ref_pts, ref_w = _reference_rule(mesh.dim, degree)
    basis, ref_grads = _reference_basis(mesh.dim, space.degree, ref_pts)
    v = mesh.vertices[mesh.cells]  # (nc, d+1, d)
    v0 = v[:, 0]
    J = np.stack([v[:, a + 1] - v0 for a in range(mesh.dim)], axis=2)  # (nc, d, d)
    detJ = np.abs(np.linalg.det(J))
    Jinv = np.linalg.inv(J)
    points = v0[:, None, :] + np.einsum("cde,qe->cqd", J, ref_pts)
    weights = detJ[:, None] * ref_w[None, :]
    # physical gradient = J^{-T} reference gradient
    grads = np.einsum("ced,qie->cqid", Jinv, ref_grads)
    rule = _CellRule(points, weights, basis, grads)
    cache[degree] = rule
    return rule


def _dofs(mesh, degree):
    nv = len(mesh.vertices)
    if degree == 1:
        return mesh.vertices.copy(), mesh.cells.copy()
    # 1D quadratic: vertex dofs first, then one midpoint per cell
    nc = len(mesh.cells)
    mid = 0.5 * (mesh.vertices[mesh.cells[:, 0]] + mesh.vertices[mesh.cells[:, 1]])
    coords = np.vstack([mesh.vertices, mid])
    cell_dofs = np.column_stack([mesh.cells, nv + np.arange(nc)])
    return coords, cell_dofs


def _boundary_mask(coords):
    tol = 1e-12
    return np.any((coords < tol) | (coords > 1 - tol), axis=1)


def build_space(domain, n, degree=1):
    """Assemble the FE space on ``"unit_interval"`` or ``"unit_square"``.

    Supported: P1 and P2 in 1D, P1 in 2D; ``n`` elements per side.
    """
    if n < 2:
        raise ValueError(f"need at least 2 elements per side, got n={n}")
    if domain in ("unit_interval", 1):
        if degree not in (1, 2):
            raise CapabilityError(f"1D supports degree 1 or 2, got {degree}")
        mesh = unit_interval_mesh(n)
    elif domain in ("unit_square", 2):
        if degree != 1:
            raise CapabilityError(f"2D supports degree 1 only, got {degree}")
        mesh = unit_square_mesh(n)
    else:
        raise CapabilityError(f"unknown domain {domain!r}")

    coords, cell_dofs = _dofs(mesh, degree)
    interior = np.flatnonzero(~_boundary_mask(coords))
    space = FeSpace(mesh, degree, coords, cell_dofs, interior,
                    mass=None, stiffness=None, lumped_weights=None)

    rule = space.cell_rule(2 * degree + 2)
    Mloc = np.einsum("cq,qi,qj->cij", rule.weights, rule.basis, rule.basis)
    Aloc = np.einsum("cq,cqid,cqjd->cij", rule.weights, rule.grads, rule.grads)
    nloc = cell_dofs.shape[1]
    rows = np.repeat(cell_dofs, nloc, axis=1).ravel()
    cols = np.tile(cell_dofs, (1, nloc)).ravel()
    ndof = len(coords)
    Mfull = sp.coo_matrix((Mloc.ravel(), (rows, cols)), shape=(ndof, ndof)).tocsr()
    Afull = sp.coo_matrix((Aloc.ravel(), (rows, cols)), shape=(ndof, ndof)).tocsr()
    # weights are integrals of the basis functions, int phi_i = full row sums
    weights = np.asarray(Mfull.sum(axis=1)).ravel()[interior]
    M = Mfull[interior][:, interior].tocsr()
    A = Afull[interior][:, interior].tocsr()
    # symmetrize away assembly round-off
    M = ((M + M.T) * 0.5).tocsr()
    A = ((A + A.T) * 0.5).tocsr()
    object.__setattr__(space, "mass", M)
    object.__setattr__(space, "stiffness", A)
    object.__setattr__(space, "lumped_weights", weights)
    return space


def l2_project(space, f):
    """Coefficients c with M c = ((f, phi_i))_i."""
    if callable(f):
        b = space.load(f)
    else:
        b = np.asarray(f, dtype=float)
    return space.solve_mass(b)


def ritz_project(space, grad_u):
    """Coefficients c with A c = ((grad u, grad phi_i))_i."""
    b = space.gradient_load(grad_u)
    return space._stiffness_lu.solve(b)


def apply_discrete_laplacian(space, v):
    """Delta_h v = -M^{-1} A v (works for complex v)."""
    v = np.asarray(v)
    Av = space.stiffness @ v
    return -space.solve_mass(Av)


def lp_norm(space, v, p, mode="quadrature"):
    """Discrete L^p norm of an FE function.

    ``quadrature`` integrates |v|^p cellwise with a degree r+2 rule (p = inf
    takes the max over quadrature and dof points); ``lumped`` uses the
    weights int(phi_i).
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p!r}")
    v = np.asarray(v)
    if mode == "lumped":
        a = np.abs(v)
        if np.isinf(p):
            return float(a.max(initial=0.0))
        return float(np.sum(space.lumped_weights * a**p) ** (1.0 / p))
    if mode != "quadrature":
        raise ValueError(f"unknown norm mode {mode!r}")
    rule = space.norm_rule()
    vals = np.abs(space.evaluate(v, rule))
    return quadrature_lp(vals, rule.weights, p, extra=np.abs(v))


def quadrature_lp(abs_vals, weights, p, extra=None):
    """L^p norm from absolute values at quadrature points."""
    if np.isinf(p):
        m = float(abs_vals.max(initial=0.0))
        if extra is not None and np.size(extra):
            m = max(m, float(np.max(extra)))
        return m
    return float(np.sum(weights * abs_vals**p) ** (1.0 / p))


def solve_resolvent(space, z, g):
    """u with (z + Delta_h) u = g, i.e. (z M - A) u = M g."""
    z = complex(z)
    if abs(z.imag) <= 1e-12 * max(1.0, abs(z)) and z.real > 0:
        gap = np.min(np.abs(space.eigenvalues - z.real))
        if gap < 1e-12 * max(1.0, abs(z)):
            raise NearSingularError(f"z={z} lies on the spectrum of -Delta_h (gap {gap:.3g})")
    K = (z * space.mass - space.stiffness).tocsc().astype(complex)
    lu = spla.splu(K)
    rhs = space.mass @ np.asarray(g, dtype=complex)
    u = lu.solve(rhs)
    if not np.iscomplexobj(g) and z.imag == 0.0:
        u = u.real
    return u


def resolvent_matrix(space, z):
    """Dense matrix of (z + Delta_h)^{-1} acting on interior coefficients."""
    K = (complex(z) * space.mass - space.stiffness).toarray()
    return scipy.linalg.solve(K, space.mass.toarray())


def generalized_eigenpairs(space, count=None):
    """Lowest ``count`` pairs of A v = lam M v, M-orthonormal, ascending."""
    N = space.ndof
    count = N if count is None else count
    if not 1 <= count <= N:
        raise ValueError(f"count must be in 1..{N}, got {count}")
    lam, V = scipy.linalg.eigh(space.stiffness.toarray(), space.mass.toarray(),
                               subset_by_index=[0, count - 1])
    return lam, V


def export_operators(space, base):
    """Write mass and stiffness as Matrix Market coordinate files."""
    scipy.io.mmwrite(f"{base}_mass.mtx", space.mass)
    scipy.io.mmwrite(f"{base}_stiffness.mtx", space.stiffness)
    return [f"{base}_mass.mtx", f"{base}_stiffness.mtx"]
