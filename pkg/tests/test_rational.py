from fractions import Fraction as Fr

import numpy as np
import pytest

from dgmaxreg import derive_family, pade_defect_order, stability_profile
from dgmaxreg.rational import HOMOG, RationalFamily, evaluate, evaluate_exact


def test_q0_is_backward_euler():
    fam = derive_family(0)
    assert fam.p_hat == (Fr(1), Fr(1))
    assert fam.p_homog == ((Fr(1),),)


def test_q1_family():
    fam = derive_family(1)
    assert fam.p_hat == (Fr(1), Fr(2, 3), Fr(1, 6))
    assert fam.p_homog[0] == (Fr(1), Fr(2, 3))
    assert fam.p_homog[1] == (Fr(1), Fr(-1, 3))


def test_q2_endpoint_is_the_2_3_pade_approximant():
    fam = derive_family(2)
    assert fam.p_hat == (Fr(1), Fr(3, 5), Fr(3, 20), Fr(1, 60))
    assert fam.p_homog[2] == (Fr(1), Fr(-2, 5), Fr(1, 20))


@pytest.mark.parametrize("q", range(4))
def test_family_consistency(q):
    fam = derive_family(q)
    for l in range(q + 1):
        assert evaluate_exact(fam, l, HOMOG, 0) == 1
    # forced numerators sum against e0 to the homogeneous one
    z = Fr(3, 7)
    k_inv = [[evaluate_exact(fam, l, j, z) for j in range(q + 1)] for l in range(q + 1)]
    from dgmaxreg.rational import local_matrix_polynomial
    from dgmaxreg.timebasis import peval
    K = [[peval(p, z) for p in row] for row in local_matrix_polynomial(q)]
    for i in range(q + 1):
        for j in range(q + 1):
            assert sum(K[i][m] * k_inv[m][j] for m in range(q + 1)) == (1 if i == j else 0)


def test_json_round_trip():
    fam = derive_family(2)
    assert RationalFamily.from_dict(fam.to_dict()) == fam


@pytest.mark.parametrize("q", [0, 1, 2])
def test_pade_order(q):
    assert pade_defect_order(derive_family(q)) == pytest.approx(2 * q + 2, abs=0.1)


@pytest.mark.parametrize("q", [0, 1, 2])
def test_strong_a_stability(q):
    fam = derive_family(q)
    prof = stability_profile(fam, np.concatenate([[0.0], np.logspace(-3, 7, 200)]))
    assert prof["sup"] == pytest.approx(1.0)
    assert prof["tail"] < 1e-6
    with pytest.raises(ValueError):
        stability_profile(fam, np.linspace(0, 10, 5))


def test_evaluate_vectorized_and_complex():
    fam = derive_family(1)
    z = np.array([0.5, 2.0])
    np.testing.assert_allclose(evaluate(fam, 1, HOMOG, z), (1 - z / 3) / (1 + 2 * z / 3 + z**2 / 6))
    w = 1 + 1j
    assert evaluate(fam, 1, HOMOG, w) == pytest.approx((1 - w / 3) / (1 + 2 * w / 3 + w**2 / 6))
