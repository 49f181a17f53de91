import math

import numpy as np
import pytest

from dgmaxreg import NormSpec, PiecewisePolynomialTimeFunction, dg_solve, error_norm, make_uniform
from dgmaxreg import project_pi_k, spacetime_norm
from dgmaxreg.temporal import function_norm, jump_functional, parse_exponent

INF = math.inf


def test_parse_exponent():
    assert parse_exponent("inf") == INF
    assert parse_exponent("2") == 2.0
    with pytest.raises(ValueError):
        parse_exponent(0.5)
    with pytest.raises(ValueError):
        NormSpec(2, 2, mode="other")


@pytest.mark.parametrize("q", [0, 1, 2])
def test_pi_k_reproduces_degree_q(q):
    part = make_uniform(1.0, 5)
    poly = lambda t: sum((i + 1) * t**i for i in range(q + 1))
    pk = project_pi_k(poly, part, q)
    for t in (0.13, 0.5, 0.99):
        assert pk(t) == pytest.approx(poly(t), abs=1e-13)


def test_pi_k_matches_endpoint_and_moments():
    part = make_uniform(1.0, 4)
    u = np.exp
    pk = project_pi_k(u, part, 1)
    for m in range(1, 5):
        a, b = part.interval(m)
        assert pk.interval_value(m, [1.0])[0] == pytest.approx(np.exp(b))
        # zeroth moment: mean over the interval
        s = np.linspace(0, 1, 2001)
        mean = np.trapezoid(pk.interval_value(m, s), s)
        assert mean == pytest.approx((np.exp(b) - np.exp(a)) / (b - a), rel=1e-6)


def test_scalar_time_norms():
    part = make_uniform(1.0, 8)
    q = 1
    coeffs = np.array([[a, b] for a, b in zip(part.nodes[:-1], part.nodes[1:])])
    t_fn = PiecewisePolynomialTimeFunction(part, q, coeffs)  # f(t) = t
    assert spacetime_norm(t_fn, NormSpec(2, 2)) == pytest.approx(math.sqrt(1 / 3), rel=1e-10)
    assert spacetime_norm(t_fn, NormSpec(1, 2)) == pytest.approx(0.5, rel=1e-10)
    assert spacetime_norm(t_fn, NormSpec(INF, 2)) == pytest.approx(1.0)
    assert spacetime_norm(t_fn, NormSpec(3, 2)) == pytest.approx(0.25 ** (1 / 3), rel=1e-8)


def test_function_norm_of_separable_function():
    from dgmaxreg import build_space
    V = build_space("unit_interval", 64, 2)
    part = make_uniform(1.0, 8)
    f = lambda t, x: np.sin(np.pi * x[:, 0]) * np.exp(-t)
    got = function_norm(V, part, f, NormSpec(2, 2))
    want = math.sqrt(0.5) * math.sqrt((1 - math.exp(-2)) / 2)
    assert got == pytest.approx(want, rel=1e-8)
    got1 = function_norm(V, part, f, NormSpec(1, 1))
    assert got1 == pytest.approx(2 / math.pi * (1 - math.exp(-1)), rel=1e-8)


def test_error_norm_vanishes_for_reproduced_solution():
    from dgmaxreg import build_space
    from dgmaxreg.lab import discrete_steady_1d
    V = build_space("unit_interval", 16, 1)
    prob = discrete_steady_1d(V)
    sol = dg_solve(V, make_uniform(1.0, 4), 0, u0=prob.u0, f=prob.f)
    for spec in (NormSpec(2, 2), NormSpec(INF, INF), NormSpec(1, 1)):
        assert error_norm(prob.u, sol, spec) < 1e-10


def test_jump_functional_scales_linearly(space1d):
    part = make_uniform(1.0, 8)
    u0 = lambda x: np.sin(np.pi * x[:, 0])
    a = dg_solve(space1d, part, 1, u0=u0)
    b = dg_solve(space1d, part, 1, u0=lambda x: 4 * u0(x))
    for spec in (NormSpec(2, 2), NormSpec(INF, 1)):
        assert jump_functional(b, spec) == pytest.approx(4 * jump_functional(a, spec), rel=1e-13)
