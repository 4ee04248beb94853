"""
Tests for finite-lattice states, enumeration and weights.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from src.model.lattice import (
    BoundaryValue,
    HeightFunction,
    VertexType,
    boundary_of,
    classify_vertex,
    constant_boundary,
    corner_index,
    counting_weight,
    dwbc_boundary,
    edges_to_heights,
    enumerate_states,
    field_exponents,
    fixed_boundary_constants,
    gauge_check,
    heights_to_edges,
    max_height,
    min_height,
    partition_function,
    state_weight,
    vertex_counts,
    vertex_index_at,
    vertex_type_codes,
    volume,
)
from src.model.params import ModelParams, VertexWeights
from src.utils.errors import CapExceeded, IceRuleViolation, LatticeError, NoCompletion


@pytest.mark.parametrize("n,count", [(1, 1), (2, 2), (3, 7), (4, 42), (5, 429)])
def test_dwbc_state_counts(n, count):
    """Domain wall completions are counted by the alternating sign matrix numbers."""
    assert len(enumerate_states(dwbc_boundary(n))) == count


def test_enumeration_is_lexicographic_and_complete(dwbc_small):
    states = enumerate_states(dwbc_small[3])
    keys = [tuple(h.heights[1:3, 1:3].T.ravel()) for h in states]
    assert keys == sorted(keys)
    assert len(set(states)) == len(states)
    for h in states:
        assert boundary_of(h) == dwbc_small[3]


def test_enumeration_cap():
    with pytest.raises(CapExceeded):
        enumerate_states(dwbc_boundary(4), cap=10)


def test_unit_weights_partition_function_counts_states(dwbc_small):
    assert partition_function(dwbc_small[4], ModelParams(1.0, 1.0, 1.0)) == pytest.approx(42)


def test_classify_vertex_patterns():
    assert classify_vertex((1, 1, 1, 1)) is VertexType.A1
    assert classify_vertex((0, 0, 0, 0)) is VertexType.A2
    assert classify_vertex((1, 0, 1, 0)) is VertexType.B1
    assert classify_vertex((0, 1, 0, 1)) is VertexType.B2
    assert classify_vertex((1, 1, 0, 0)) is VertexType.C1
    assert classify_vertex((0, 0, 1, 1)) is VertexType.C2


@pytest.mark.parametrize("pattern", [(1, 0, 0, 0), (1, 1, 1, 0), (0, 1, 1, 0), (2, 0, 0, 0)])
def test_classify_vertex_rejects_illegal(pattern):
    with pytest.raises(IceRuleViolation):
        classify_vertex(pattern)


def test_height_function_validation():
    with pytest.raises(LatticeError, match="southwest"):
        HeightFunction(n=1, m=1, heights=[[1, 1], [1, 1]])
    with pytest.raises(LatticeError):
        HeightFunction(n=1, m=1, heights=[[0, 2], [0, 2]])
    with pytest.raises(LatticeError):
        HeightFunction(n=2, m=1, heights=[[0, 0], [0, 0]])


def test_edges_and_heights_are_inverse(dwbc_small):
    for h in enumerate_states(dwbc_small[3]):
        e = heights_to_edges(h)
        e.check_ice_rule()
        assert edges_to_heights(e) == h


def test_edges_breaking_ice_rule_are_rejected():
    h = min_height(dwbc_boundary(2))
    e = heights_to_edges(h)
    bad = e.vertical.copy()
    bad[0, 1] = 1 - bad[0, 1]
    with pytest.raises(IceRuleViolation):
        edges_to_heights(type(e)(vertical=bad, horizontal=e.horizontal))


def test_boundary_validation():
    with pytest.raises(NoCompletion, match="corner"):
        BoundaryValue(n=1, m=1, south=(0, 1), east=(0, 1), north=(1, 0), west=(1, 0)).validate()
    with pytest.raises(NoCompletion):
        BoundaryValue(n=1, m=1, south=(0, 2), east=(2, 2), north=(2, 0), west=(0, 0)).validate()
    with pytest.raises(NoCompletion):
        constant_boundary(2, 2, value=1)


def test_min_and_max_heights_bracket_every_state(dwbc_small):
    b = dwbc_small[4]
    lo, hi = min_height(b), max_height(b)
    states = enumerate_states(b)
    assert lo in states and hi in states
    for h in states:
        assert np.all(lo.heights <= h.heights) and np.all(h.heights <= hi.heights)
    assert volume(lo) < volume(hi)


def test_constant_boundary_has_one_state():
    states = enumerate_states(constant_boundary(3, 2))
    assert len(states) == 1
    assert volume(states[0]) == 0
    assert vertex_counts(states[0])[VertexType.A2] == 6


def test_json_forms_restore_state(dwbc_small):
    h = max_height(dwbc_small[3])
    assert HeightFunction.from_json(h.to_json()) == h
    b = dwbc_small[3]
    assert BoundaryValue.from_dict(b.to_dict()) == b


def test_vertex_index_lookups_agree(dwbc_small):
    for h in enumerate_states(dwbc_small[3]):
        a, b = np.meshgrid(np.arange(3), np.arange(3), indexing="ij")
        assert np.array_equal(vertex_index_at(h.heights, a, b), vertex_type_codes(h))
        t = h.heights
        assert corner_index(t[0, 0], t[1, 0], t[0, 1], t[1, 1]) == vertex_type_codes(h)[0, 0]


def test_vertex_index_flags_illegal_patterns():
    heights = np.array([[0, 2], [1, 1]])
    assert vertex_index_at(heights, 0, 0) == -1
    assert corner_index(0, 1, 0, 2) == -1


def test_state_weight_is_exact_with_fractions(dwbc_small):
    w = VertexWeights(Fraction(2), Fraction(1, 2), Fraction(3), Fraction(1, 3), Fraction(5, 4), Fraction(4, 5))
    for h in enumerate_states(dwbc_small[3]):
        value = state_weight(h, w, Fraction(3, 2))
        assert isinstance(value, Fraction)
        counts = vertex_counts(h)
        expected = Fraction(3, 2) ** volume(h)
        for k, label in enumerate(VertexType.ordered()):
            expected *= w.as_tuple()[k] ** counts[label]
        assert value == expected


def test_counting_weight_matches_vertex_product(dwbc_small):
    p = ModelParams(1.0, 2.0, 1.5, H=0.3, V=-0.2)
    for h in enumerate_states(dwbc_small[3]):
        assert counting_weight(h, p) == pytest.approx(state_weight(h, p), rel=1e-12)


def test_field_exponents_vanish_for_domain_wall_states(dwbc_small):
    """Column and row sums of thick edges are fixed by the domain wall boundary."""
    exponents = {field_exponents(h) for h in enumerate_states(dwbc_small[4])}
    assert exponents == {(0, 0)}


def test_fixed_boundary_constants_do_not_depend_on_the_state(dwbc_small):
    values = {fixed_boundary_constants(h) for h in enumerate_states(dwbc_small[4])}
    assert len(values) == 1


def test_gauge_identity():
    rng = np.random.default_rng(7)
    b = dwbc_boundary(3)
    s_vertical = np.exp(rng.normal(size=(3, 4)))
    s_horizontal = np.exp(rng.normal(size=(4, 3)))
    for h in enumerate_states(b):
        lhs, rhs = gauge_check(h, s_vertical, s_horizontal)
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_large_lattice_weight_uses_logs():
    h = min_height(dwbc_boundary(9))
    p = ModelParams(1.0, 1.0, 1.0)
    assert state_weight(h, p) == pytest.approx(1.0)
    assert math.isfinite(state_weight(h, p, q=1.01))
