import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cgkit.core import (NonFiniteError, OracleCounters, RngStream, RunTrace, as_point,
                        convex_combine, dot, gaussian_direction)

from conftest import naive_dot

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_dot_examples():
    assert dot([1, 2, 3], [4, 5, 6]) == 32.0
    assert dot([3.5, -2.0], [0.0, 0.0]) == 0.0


def test_dot_mismatch_names_lengths():
    with pytest.raises(ValueError, match="3 vs 2"):
        dot([1, 2, 3], [1, 2])


def test_dot_matches_naive_loop():
    g = RngStream(1, 0).generator
    for _ in range(1000):
        d = int(g.integers(1, 9))
        a, b = g.standard_normal(d), g.standard_normal(d)
        ref = naive_dot(a, b)
        assert abs(dot(a, b) - ref) <= 1e-12 * max(1.0, abs(ref), np.abs(a) @ np.abs(b))


def test_convex_combine_examples():
    x, y = np.array([1.0, -2.0]), np.array([3.0, 5.0])
    assert np.array_equal(convex_combine(x, y, 0.0), x)
    assert np.array_equal(convex_combine(x, y, 1.0), y)
    assert np.allclose(convex_combine([0, 0], [2, 4], 0.25), [0.5, 1.0], atol=0)


@pytest.mark.parametrize("gamma", [-1e-12, 1.0 + 1e-12, math.nan])
def test_convex_combine_rejects_gamma(gamma):
    with pytest.raises(ValueError):
        convex_combine([0.0], [1.0], gamma)


@given(st.lists(finite, min_size=1, max_size=6), st.floats(0, 1))
def test_convex_combine_stays_between(xs, gamma):
    x = np.array(xs)
    y = -x + 1.0
    z = convex_combine(x, y, gamma)
    lo, hi = np.minimum(x, y), np.maximum(x, y)
    slack = 1e-9 * (1 + np.abs(x))
    assert np.all(z >= lo - slack) and np.all(z <= hi + slack)
    assert np.all(np.isfinite(z))


def test_convex_combine_large_magnitudes_finite():
    z = convex_combine(np.full(3, 1e100), np.full(3, -1e100), 0.5)
    assert np.all(np.isfinite(z))


def test_as_point_checks():
    with pytest.raises(ValueError, match="expected 3"):
        as_point([1.0, 2.0], 3)
    with pytest.raises(NonFiniteError):
        as_point([1.0, math.inf])
    with pytest.raises(ValueError):
        as_point([[1.0]])


def test_gaussian_direction_moments():
    rng = RngStream(3, 4)
    U = np.stack([gaussian_direction(rng, 5) for _ in range(100_000)])
    assert np.all(np.abs(U.mean(axis=0)) <= 4 / math.sqrt(1e5))
    assert np.max(np.abs(np.cov(U.T) - np.eye(5))) <= 0.05


def test_gaussian_direction_rejects_bad_dimension():
    with pytest.raises(ValueError):
        gaussian_direction(RngStream(0), 0)


def test_rng_stream_repeatable_and_independent():
    a = RngStream(99, 2).generator.standard_normal(100)
    b = RngStream(99, 2).generator.standard_normal(100)
    c = RngStream(99, 3).generator.standard_normal(100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    # independent streams: sample correlation near zero
    big = [RngStream(99, s).generator.standard_normal(20_000) for s in (5, 6)]
    assert abs(np.corrcoef(*big)[0, 1]) < 4 / math.sqrt(20_000)


def test_rng_stream_child_is_stream_id():
    assert np.array_equal(RngStream(4, 0).child(7).generator.random(5),
                          RngStream(4, 7).generator.random(5))


@pytest.mark.parametrize("seed, sid", [(-1, 0), (0, -1), (2**64, 0)])
def test_rng_stream_range(seed, sid):
    with pytest.raises(ValueError):
        RngStream(seed, sid)


def test_counters_snapshot():
    c = OracleCounters()
    c.sfo_calls += 3
    c.lmo_calls += 1
    assert c.snapshot() == (3, 0, 1)


def test_trace_record_and_non_finite():
    tr = RunTrace()
    c = OracleCounters(2, 0, 1)
    tr.record(0, 1.5, 0.5, c, 0.0, 0)
    assert tr.subopt == [1.0] and tr.sfo == [2] and len(tr) == 1
    assert np.array_equal(tr.column("lmo"), [1])
    with pytest.raises(NonFiniteError, match="iteration 7"):
        tr.record(7, math.nan, 0.0, c, 0.1, 1)
