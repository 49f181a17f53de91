from fractions import Fraction as Fr

import numpy as np
import pytest

from dgmaxreg import PiecewisePolynomialTimeFunction, local_temporal_matrices, make_uniform
from dgmaxreg.timebasis import lagrange_nodes, padd, pdegree, peval, pint01, pmul


def test_q0_matrices():
    b = local_temporal_matrices(0)
    assert b.D_exact == ((Fr(0),),)
    assert b.Q_exact == ((Fr(1),),)
    assert b.e0_exact == (Fr(1),)
    np.testing.assert_array_equal(b.nodes, [1.0])


def test_q1_matrices():
    b = local_temporal_matrices(1)
    assert b.Q_exact == ((Fr(1, 3), Fr(1, 6)), (Fr(1, 6), Fr(1, 3)))
    assert b.D_exact == ((Fr(-1, 2), Fr(1, 2)), (Fr(-1, 2), Fr(1, 2)))
    np.testing.assert_array_equal(b.e0, [1.0, 0.0])
    np.testing.assert_array_equal(b.e1, [0.0, 1.0])


@pytest.mark.parametrize("q", range(5))
def test_basis_identities(q):
    b = local_temporal_matrices(q)
    # partition of unity, so the rows of D sum to zero and Q sums to one
    s = np.linspace(0, 1, 7)
    np.testing.assert_allclose(b.values(s).sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(b.D.sum(axis=1), 0.0, atol=1e-12)
    assert sum(sum(row) for row in b.Q_exact) == 1
    # D + D^T = e1 e1^T - e0 e0^T (integration by parts)
    np.testing.assert_allclose(b.D + b.D.T, np.outer(b.e1, b.e1) - np.outer(b.e0, b.e0),
                               atol=1e-12)
    assert len(lagrange_nodes(q)) == q + 1


def test_polynomial_helpers():
    p = (Fr(1), Fr(2))
    assert pmul(p, p) == (Fr(1), Fr(4), Fr(4))
    assert pint01(pmul(p, p)) == Fr(1) + Fr(2) + Fr(4, 3)
    assert peval(padd(p, (Fr(0), Fr(-2))), Fr(5)) == 1
    assert pdegree((Fr(3), Fr(0))) == 0


def test_piecewise_function_derivative_is_exact():
    part = make_uniform(1.0, 4)
    q = 2
    b = local_temporal_matrices(q)
    # t^2 represented exactly on each interval
    coeffs = np.array([[(a + (c - a) * s) ** 2 for s in b.nodes]
                       for a, c in zip(part.nodes[:-1], part.nodes[1:])])
    f = PiecewisePolynomialTimeFunction(part, q, coeffs)
    assert f(0.3) == pytest.approx(0.09)
    d = f.derivative()
    assert d(0.3) == pytest.approx(0.6)
    assert f.interval_derivative(2, [0.5])[0] == pytest.approx(2 * 0.375)
    with pytest.raises(ValueError):
        PiecewisePolynomialTimeFunction(part, 1, coeffs)
