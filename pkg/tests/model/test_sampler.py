"""
Tests for the Metropolis height-function sampler.
"""

import json
from fractions import Fraction

import numpy as np
import pytest
from scipy.signal import lfilter

from src.model.lattice import (
    constant_boundary,
    dwbc_boundary,
    enumerate_states,
    heights_to_edges,
    max_height,
    min_height,
    state_weight,
    volume,
)
from src.model.params import ModelParams, VertexWeights
from src.model.sampler import (
    ChainState,
    EstimatorSet,
    advance,
    apply_flip,
    autocorrelation,
    checkpoint,
    exact_frequencies,
    flip_graph_connected,
    flip_proposal,
    integrated_autocorrelation,
    log_weight_of,
    mean_height_field,
    q_from_lambda,
    restore,
    run_chain,
    state_frequencies,
)
from src.utils.errors import LatticeError, NotConverged, NumericalError

RATIONAL = VertexWeights(Fraction(2), Fraction(1, 2), Fraction(3), Fraction(1, 3), Fraction(5, 4), Fraction(4, 5))


def _key(heights) -> tuple:
    return tuple(np.asarray(heights).ravel().tolist())


def _inner_faces(n: int):
    return [(i, j) for i in range(1, n) for j in range(1, n)]


def test_unit_weights_accept_every_legal_move():
    state = ChainState.create(ModelParams(1.0, 1.0, 1.0), 1.0, min_height(dwbc_boundary(3)), seed=0)
    ratios = {flip_proposal(state, face, d) for face in _inner_faces(3) for d in (1, -1)}
    assert ratios <= {0, 1.0}
    assert 1.0 in ratios


def test_flip_ratio_is_the_exact_weight_ratio():
    """Every proposal ratio equals w(new)/w(old); illegal targets give 0."""
    q = Fraction(3, 2)
    states = enumerate_states(dwbc_boundary(4))
    by_key = {_key(h.heights): h for h in states}
    for h in states:
        state = ChainState.create(RATIONAL, q, h, seed=0)
        for i, j in _inner_faces(4):
            for d in (1, -1):
                ratio = flip_proposal(state, (i, j), d)
                t = np.array(h.heights)
                t[i, j] += d
                target = by_key.get(_key(t))
                if target is None:
                    assert ratio == 0
                else:
                    assert ratio == state_weight(target, RATIONAL, q) / state_weight(h, RATIONAL, q)


def test_flip_up_then_down_restores_the_state():
    p = ModelParams(1.0, 2.0, 1.5)
    h = min_height(dwbc_boundary(4))
    state = ChainState.create(p, 1.3, h, seed=0)
    before = state.log_weight
    face = next(f for f in _inner_faces(4) if flip_proposal(state, f, 1) > 0)
    assert apply_flip(state, face, 1)
    assert state.log_weight == pytest.approx(log_weight_of(state.height_function(), p, 1.3))
    assert apply_flip(state, face, -1)
    assert state.height_function() == h
    assert state.log_weight == pytest.approx(before)
    state.check()


def test_illegal_moves_are_refused():
    state = ChainState.create(ModelParams(1.0, 1.0, 1.0), 1.0, min_height(dwbc_boundary(3)), seed=0)
    assert all(not apply_flip(state, face, -1) for face in _inner_faces(3))
    with pytest.raises(LatticeError):
        flip_proposal(state, (0, 1), 1)
    with pytest.raises(ValueError):
        flip_proposal(state, (1, 1), 2)


def test_non_positive_q_is_rejected():
    with pytest.raises(ValueError):
        ChainState.create(ModelParams(1.0, 1.0, 1.0), 0.0, min_height(dwbc_boundary(2)), seed=0)


def test_check_detects_stale_caches():
    state = ChainState.create(ModelParams(1.0, 2.0, 1.5), 1.0, max_height(dwbc_boundary(3)), seed=0)
    state.check()
    state.log_weight += 1.0
    with pytest.raises(NumericalError):
        state.check()
    state.log_weight -= 1.0
    state.codes[0, 0] = (state.codes[0, 0] + 1) % 6
    with pytest.raises(LatticeError):
        state.check()


def test_flip_graph_is_connected():
    states = enumerate_states(dwbc_boundary(4))
    assert flip_graph_connected(states)
    assert not flip_graph_connected([min_height(dwbc_boundary(4)), max_height(dwbc_boundary(4))])


def test_exact_frequencies_are_normalized():
    states = enumerate_states(dwbc_boundary(3))
    freq = exact_frequencies(states, RATIONAL, Fraction(2))
    assert sum(freq) == 1
    assert all(isinstance(f, Fraction) for f in freq)


def _assert_matches(observed, stderr, expected):
    for f, e, x in zip(observed, stderr, expected):
        assert abs(f - float(x)) <= 5 * e + 0.01


@pytest.mark.parametrize("mode", ["random", "colored"])
def test_visit_frequencies_match_enumeration(mode):
    b = dwbc_boundary(3)
    states = enumerate_states(b)
    p = ModelParams(1.0, 2.0, 1.5)
    est = run_chain(p, 2.0, b, steps=20000, seed=11, mode=mode, track_states=True)
    freq, err = state_frequencies(est, states)
    assert freq.sum() == pytest.approx(1.0)
    _assert_matches(freq, err, exact_frequencies(states, p, 2.0))


@pytest.mark.slow
@pytest.mark.parametrize("mode", ["random", "colored"])
def test_visit_frequencies_over_a_million_steps(mode):
    b = dwbc_boundary(3)
    states = enumerate_states(b)
    p = ModelParams(1.0, 2.0, 1.5)
    # A sweep proposes one flip per inner face, four of them at N = 3
    est = run_chain(p, 2.0, b, steps=10 ** 6 // 4, seed=23, mode=mode, track_states=True)
    freq, err = state_frequencies(est, states)
    expected = np.array([float(x) for x in exact_frequencies(states, p, 2.0)])
    assert np.all(np.abs(freq - expected) <= 3 * err)


def test_two_state_lattice_is_balanced():
    b = dwbc_boundary(2)
    states = enumerate_states(b)
    est = run_chain(ModelParams(1.0, 1.0, 1.0), 1.0, b, steps=4000, seed=5, track_states=True)
    freq, err = state_frequencies(est, states)
    _assert_matches(freq, err, [0.5, 0.5])


def test_edge_means_match_enumeration():
    b = dwbc_boundary(3)
    p = ModelParams(2.0, 1.0, 1.5, H=0.2)
    states = enumerate_states(b)
    weights = np.array([state_weight(h, p) for h in states])
    weights /= weights.sum()
    exact_v = sum(w * heights_to_edges(h).vertical for w, h in zip(weights, states))
    est = run_chain(p, 1.0, b, steps=20000, seed=3, mode="colored")
    v, _ = est.edge_means()
    v_err, _ = est.edge_stderr()
    _assert_matches(v.ravel(), v_err.ravel(), exact_v.ravel())


def test_edge_occupations_are_height_differences():
    b = dwbc_boundary(4)
    pair = (("v", 1, 2), ("h", 2, 1))
    est = run_chain(ModelParams(1.0, 2.0, 1.5), 1.0, b, steps=500, seed=2, pairs=[pair])
    v, h = est.edge_means()
    mean = est.mean_heights()
    assert np.allclose(v, np.diff(mean, axis=0))
    assert np.allclose(h, np.diff(mean, axis=1))
    assert 0.0 <= est.pair_means()[0] <= min(v[1, 2], h[2, 1]) + 1e-12


def test_unknown_edge_in_pairs():
    with pytest.raises(LatticeError):
        EstimatorSet(n=2, m=2, pairs=((("v", 5, 0), ("h", 0, 0)),))


def test_seeded_runs_are_reproducible():
    b = dwbc_boundary(4)
    p = ModelParams(1.0, 2.0, 1.5)
    first = run_chain(p, 1.0, b, steps=300, seed=9, stream=1)
    again = run_chain(p, 1.0, b, steps=300, seed=9, stream=1)
    other = run_chain(p, 1.0, b, steps=300, seed=9, stream=2)
    assert np.array_equal(first.sums, again.sums)
    assert first.volumes[1] == again.volumes[1]
    assert first.volumes[1] != other.volumes[2]


@pytest.mark.parametrize("mode", ["random", "colored"])
def test_boundary_faces_never_move(mode):
    b = dwbc_boundary(5)
    h = min_height(b)
    state = ChainState.create(ModelParams(1.0, 2.0, 1.5), 1.0, h, seed=4)
    advance(state, 200, mode)
    for side in (0, -1):
        assert np.array_equal(state.heights[side, :], h.heights[side, :])
        assert np.array_equal(state.heights[:, side], h.heights[:, side])
    assert state.steps == 200
    state.check()


def test_unknown_mode():
    state = ChainState.create(ModelParams(1.0, 1.0, 1.0), 1.0, min_height(dwbc_boundary(3)), seed=0)
    with pytest.raises(ValueError):
        advance(state, 1, "sideways")


def test_merge_combines_streams():
    b = dwbc_boundary(3)
    p = ModelParams(1.0, 1.0, 1.0)
    left = run_chain(p, 1.0, b, steps=200, seed=1, stream=0)
    right = run_chain(p, 1.0, b, steps=300, seed=1, stream=1)
    merged = left.merge(right)
    assert merged.count == 500
    assert sorted(merged.volumes) == [0, 1]
    assert np.allclose(merged.sums, left.sums + right.sums)
    with pytest.raises(ValueError):
        left.merge(left)
    with pytest.raises(ValueError):
        left.merge(run_chain(p, 1.0, dwbc_boundary(4), steps=10, seed=1, stream=3))


def test_volume_weight_shifts_the_mean_volume():
    b = dwbc_boundary(4)
    p = ModelParams(1.0, 1.0, 1.0)
    low = run_chain(p, q_from_lambda(8.0, 4), b, steps=2000, seed=0)
    high = run_chain(p, q_from_lambda(-8.0, 4), b, steps=2000, seed=0)
    assert np.mean(low.volumes[0]) < np.mean(high.volumes[0])
    assert q_from_lambda(0.0, 7) == 1.0


def test_constant_boundary_chain_stays_put():
    b = constant_boundary(3, 3)
    est = run_chain(ModelParams(1.0, 2.0, 1.5), 1.0, b, steps=100, seed=0)
    assert est.acceptance == 0.0
    assert np.all(est.mean_heights() == 0.0)
    assert set(est.volumes[0]) == {0}


def test_integrated_autocorrelation():
    assert integrated_autocorrelation([3.0] * 50) == 1.0
    rng = np.random.default_rng(0)
    assert integrated_autocorrelation(rng.normal(size=20000)) == pytest.approx(1.0, abs=0.15)
    ar = lfilter([1.0], [1.0, -0.9], rng.normal(size=200000))
    assert integrated_autocorrelation(ar) == pytest.approx(19.0, rel=0.2)


def test_mean_height_field_needs_enough_samples():
    b = dwbc_boundary(3)
    est = run_chain(ModelParams(1.0, 1.0, 1.0), 1.0, b, steps=10, seed=0)
    with pytest.raises(NotConverged):
        mean_height_field(est)
    long = run_chain(ModelParams(1.0, 1.0, 1.0), 1.0, b, steps=5000, seed=0)
    field = mean_height_field(long)
    assert field.shape == (4, 4)
    assert field[-1, -1] == pytest.approx(1.0)
    assert set(autocorrelation(long)) == {0}


def test_state_frequencies_require_tracking():
    est = run_chain(ModelParams(1.0, 1.0, 1.0), 1.0, dwbc_boundary(2), steps=10, seed=0)
    with pytest.raises(ValueError):
        state_frequencies(est, enumerate_states(dwbc_boundary(2)))


def test_rows_use_unit_square_coordinates():
    est = run_chain(ModelParams(1.0, 1.0, 1.0), 1.0, dwbc_boundary(3), steps=64, seed=0)
    rows = est.rows()
    assert len(rows) == 16
    assert rows[0][:3] == (0.0, 0.0, 0.0)
    assert rows[-1][:3] == (1.0, 1.0, 1.0)
    summary = est.summary()
    assert summary["samples"] == 64
    json.dumps(summary)


@pytest.mark.parametrize("weights,q", [(RATIONAL, Fraction(3, 2)), (ModelParams(1.0, 2.0, 1.5), 0.8)])
def test_checkpoint_restores_the_chain(weights, q):
    state = ChainState.create(weights, q, min_height(dwbc_boundary(4)), seed=21, stream=2)
    advance(state, 7, "random")
    copy = restore(checkpoint(state))
    assert copy.height_function() == state.height_function()
    assert copy.weights == state.weights
    assert copy.q == state.q
    assert copy.steps == 7
    advance(state, 9, "random")
    advance(copy, 9, "random")
    assert np.array_equal(copy.heights, state.heights)
    assert copy.log_weight == pytest.approx(state.log_weight)


def test_volume_is_what_the_chain_records():
    b = dwbc_boundary(3)
    est = run_chain(ModelParams(1.0, 1.0, 1.0), 1.0, b, steps=5, seed=0, start=max_height(b), burn_in=0)
    assert max(est.volumes[0]) <= volume(max_height(b))
