import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgmaxreg import (MeshConditionError, MeshConditions, TimePartition, make_graded,
                      make_uniform, validate)
from dgmaxreg.time_partition import check


def test_uniform_steps_and_accessors():
    part = make_uniform(2.0, 8)
    assert part.M == 8 and part.T == 2.0
    np.testing.assert_allclose(part.steps, 0.25)
    assert part.interval(1) == (0.0, 0.25)
    assert part.locate(0.25) == 1
    assert part.locate(0.2500001) == 2
    assert part.locate(2.0) == 8
    with pytest.raises(IndexError):
        part.interval(9)
    with pytest.raises(ValueError):
        part.locate(0.0)


def test_nodes_are_validated_and_frozen():
    with pytest.raises(ValueError, match="first node"):
        TimePartition(np.array([0.1, 1.0]))
    with pytest.raises(ValueError, match="strictly increasing"):
        TimePartition(np.array([0.0, 0.5, 0.5, 1.0]))
    part = make_uniform(1.0, 4)
    with pytest.raises(ValueError):
        part.nodes[1] = 0.3


def test_json_round_trip():
    part = make_graded(1.0, 16, 1.5)
    back = TimePartition.from_json(part.to_json())
    np.testing.assert_array_equal(back.nodes, part.nodes)


def test_condition_iii_needs_four_steps():
    with pytest.raises(MeshConditionError) as err:
        make_uniform(1.0, 2)
    assert err.value.condition == "iii"
    rep = validate(TimePartition(np.array([0.0, 0.5, 1.0])))
    assert not rep["iii"].passed


def test_condition_i_small_first_step():
    # k_min = 1e-3 < c k^2 with k close to 1/4
    nodes = np.concatenate([[0.0, 1e-3], np.linspace(0.25, 1.0, 4)])
    rep = validate(TimePartition(nodes))
    assert not rep["i"].passed
    assert rep["i"].worst_index == 1


def test_condition_ii_ratio_and_index():
    nodes = np.array([0.0, 0.05, 0.25, 0.45, 0.65, 0.85, 1.0])
    rep = validate(TimePartition(nodes), c=0.0)
    assert not rep["ii"].passed
    assert rep["ii"].worst_index == 1
    assert rep["ii"].achieved == pytest.approx(0.25)
    with pytest.raises(MeshConditionError, match=r"\(ii\)"):
        check(TimePartition(nodes), MeshConditions(c=0.0))


def test_graded_mesh_shape():
    part = make_graded(1.0, 16, 2.0, conditions=None)
    np.testing.assert_allclose(part.nodes, (np.arange(17) / 16) ** 2)


@settings(max_examples=40, deadline=None)
@given(T=st.floats(0.1, 10.0), M=st.integers(4, 200))
def test_uniform_meshes_always_admissible(T, M):
    part = make_uniform(T, M)
    assert validate(part).passed
    assert part.nodes[-1] == T


def test_coarse_quadratic_grading_violates_iii():
    # largest step 1 - (3/4)^2 = 7/16 exceeds T/4
    part = make_graded(1.0, 4, 2.0, conditions=None)
    rep = validate(part)
    assert rep["i"].passed and rep["ii"].passed and not rep["iii"].passed
    assert rep["iii"].achieved == pytest.approx(7 / 16)
    with pytest.raises(MeshConditionError):
        make_graded(1.0, 4, 2.0)
