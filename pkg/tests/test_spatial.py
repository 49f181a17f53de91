import numpy as np
import pytest
import scipy.sparse as sp

from dgmaxreg import build_space, generalized_eigenpairs, l2_project, lp_norm, ritz_project
from dgmaxreg.spatial import (CapabilityError, NearSingularError, apply_discrete_laplacian,
                              export_operators, resolvent_matrix, solve_resolvent)


def _tridiag(n, a, b):
    return sp.diags([np.full(n - 1, b), np.full(n, a), np.full(n - 1, b)], [-1, 0, 1]).toarray()


def test_p1_1d_matrices_are_the_textbook_stencils():
    n = 10
    h = 1.0 / n
    V = build_space("unit_interval", n, 1)
    assert V.ndof == n - 1
    np.testing.assert_allclose(V.mass.toarray(), h / 6 * _tridiag(n - 1, 4, 1), atol=1e-15)
    np.testing.assert_allclose(V.stiffness.toarray(), _tridiag(n - 1, 2, -1) / h, atol=1e-12)
    np.testing.assert_allclose(V.lumped_weights, h)


def test_p1_1d_eigenvalues_closed_form():
    n = 16
    h = 1.0 / n
    V = build_space("unit_interval", n, 1)
    j = np.arange(1, n)
    c = np.cos(j * np.pi * h)
    exact = 6 / h**2 * (1 - c) / (2 + c)
    lam, Vec = generalized_eigenpairs(V)
    np.testing.assert_allclose(lam, exact, rtol=1e-12)
    np.testing.assert_allclose(Vec.T @ V.mass @ Vec, np.eye(n - 1), atol=1e-12)


def test_p1_2d_stiffness_is_five_point_stencil():
    n = 4
    V = build_space("unit_square", n, 1)
    A = V.stiffness.toarray()
    assert V.ndof == (n - 1) ** 2
    np.testing.assert_allclose(np.diag(A), 4.0)
    np.testing.assert_allclose(A.sum(axis=1)[4], 0.0, atol=1e-14)  # centre node of 3x3
    np.testing.assert_allclose(V.lumped_weights, 1.0 / n**2)


def test_p2_mass_integrates_quadratics_exactly():
    V = build_space("unit_interval", 4, 2)
    # x(1-x) lies in the P2 space with zero boundary values
    c = V.interpolate(lambda x: x[:, 0] * (1 - x[:, 0]))
    assert c @ (V.mass @ c) == pytest.approx(1 / 30, rel=1e-13)
    assert c @ (V.stiffness @ c) == pytest.approx(1 / 3, rel=1e-13)


def test_capabilities():
    with pytest.raises(CapabilityError):
        build_space("unit_square", 4, 2)
    with pytest.raises(CapabilityError):
        build_space("unit_interval", 4, 3)
    with pytest.raises(ValueError):
        build_space("unit_interval", 1, 1)


def test_projections_reproduce_space_members(space1d_p2):
    f = lambda x: x[:, 0] * (1 - x[:, 0])
    g = lambda x: (1 - 2 * x[:, 0])[:, None]
    c = space1d_p2.interpolate(f)
    np.testing.assert_allclose(l2_project(space1d_p2, f), c, atol=1e-13)
    np.testing.assert_allclose(ritz_project(space1d_p2, g), c, atol=1e-13)


def test_discrete_laplacian_on_eigenvector(space2d):
    lam, V = generalized_eigenpairs(space2d, 3)
    np.testing.assert_allclose(apply_discrete_laplacian(space2d, V[:, 2]), -lam[2] * V[:, 2],
                               atol=1e-10)


def test_lp_norms_of_a_hat(space1d):
    v = np.zeros(space1d.ndof)
    v[7] = 1.0
    h = space1d.h
    assert lp_norm(space1d, v, 2) == pytest.approx(np.sqrt(2 * h / 3), rel=1e-13)
    assert lp_norm(space1d, v, 1) == pytest.approx(h, rel=1e-13)
    assert lp_norm(space1d, v, np.inf) == 1.0
    assert lp_norm(space1d, v, 1, mode="lumped") == pytest.approx(h)
    with pytest.raises(ValueError):
        lp_norm(space1d, v, 0.5)


def test_resolvent_solve_matches_dense(space1d, rng):
    g = rng.standard_normal(space1d.ndof)
    z = -3.0 + 4.0j
    u = solve_resolvent(space1d, z, g)
    np.testing.assert_allclose(u, resolvent_matrix(space1d, z) @ g, rtol=1e-10)
    # (z + Delta_h) u = g
    np.testing.assert_allclose(z * u + apply_discrete_laplacian(space1d, u), g, atol=1e-9)


def test_resolvent_on_spectrum_is_refused(space1d):
    lam = space1d.eigenvalues[0]
    with pytest.raises(NearSingularError):
        solve_resolvent(space1d, lam, np.ones(space1d.ndof))


def test_export_operators(tmp_path, space1d):
    import scipy.io
    paths = export_operators(space1d, tmp_path / "ops")
    M = scipy.io.mmread(paths[0])
    np.testing.assert_allclose(M.toarray(), space1d.mass.toarray())


def test_interior_vertex_of_n2_square_has_six_triangles():
    V = build_space("unit_square", 2, 1)
    centre = int(np.flatnonzero(np.all(np.isclose(V.mesh.vertices, 0.5), axis=1))[0])
    assert int(np.sum(np.any(V.mesh.cells == centre, axis=1))) == 6
