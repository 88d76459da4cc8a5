from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from shapegraph.curves import as_curve, concatenate, edge_length, is_degenerate, resample_edge


def test_resample_line_evenly():
    out = resample_edge(np.array([[0.0, 0.0], [3.0, 0.0]]), 4)
    np.testing.assert_allclose(out, [[0, 0], [1, 0], [2, 0], [3, 0]], atol=1e-12)


def test_resample_right_angle_midpoint():
    out = resample_edge(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]), 3)
    np.testing.assert_allclose(out, [[0, 0], [1, 0], [1, 1]], atol=1e-12)


def test_resample_already_uniform_is_identity():
    t = np.linspace(0, 2, 17)
    c = np.column_stack([t, 0.5 * t])
    np.testing.assert_allclose(resample_edge(c, 17), c, atol=1e-9)


def test_resample_degenerate_gives_copies():
    c = np.array([[1.0, 2.0]] * 5)
    out = resample_edge(c, 7)
    assert out.shape == (7, 2)
    assert np.all(out == [1.0, 2.0])
    assert is_degenerate(out)


def test_resample_keeps_endpoints_exactly(rng):
    c = np.cumsum(rng.normal(size=(13, 3)), axis=0)
    out = resample_edge(c, 30)
    assert np.array_equal(out[0], c[0]) and np.array_equal(out[-1], c[-1])


def test_resample_gaps_equal_on_polyline(rng):
    c = np.cumsum(rng.normal(size=(9, 2)), axis=0)
    out = resample_edge(c, 30)
    # samples lie on the input polyline so gaps are equal along arc length;
    # a chord is at most the arc between samples
    gaps = np.linalg.norm(np.diff(out, axis=0), axis=1)
    assert gaps.max() <= edge_length(c) / 29 * (1 + 1e-9)


def test_resample_gaps_equal_on_straight_line():
    c = np.array([[0.0, 0.0], [0.3, 0.0], [0.31, 0.0], [5.0, 0.0]])
    gaps = np.diff(resample_edge(c, 30)[:, 0])
    np.testing.assert_allclose(gaps, gaps[0], rtol=1e-6)


def test_resample_preserves_length_on_smooth_curve():
    t = np.linspace(0, np.pi, 400)
    c = np.column_stack([np.cos(t), np.sin(t)])
    out = resample_edge(c, 30)
    # polyline through resampled points of a semicircle
    assert abs(edge_length(out) - edge_length(c)) / edge_length(c) < 1e-3


def test_resample_skips_repeated_points():
    c = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    np.testing.assert_allclose(resample_edge(c, 5)[:, 0], [0, 0.5, 1, 1.5, 2])


@pytest.mark.parametrize("T", [0, 1])
def test_resample_rejects_small_T(T):
    with pytest.raises(ValueError):
        resample_edge(np.zeros((2, 2)), T)


def test_edge_length_examples():
    assert edge_length(np.array([[0.0, 0.0], [3.0, 4.0]])) == 5.0
    assert edge_length(np.array([[1.0, 1.0], [1.0, 1.0]])) == 0.0
    t = np.linspace(0, np.pi, 200)
    assert abs(edge_length(np.column_stack([np.cos(t), np.sin(t)])) - np.pi) < 0.01


def test_concatenate_shares_junction():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    b = np.array([[1.0, 0.0], [1.0, 1.0]])
    assert concatenate(a, b).tolist() == [[0, 0], [1, 0], [1, 1]]


def test_as_curve_rejects_bad_input():
    with pytest.raises(ValueError):
        as_curve([[0.0, 0.0]])
    with pytest.raises(ValueError):
        as_curve([[0.0, np.nan], [1.0, 1.0]])


@settings(max_examples=60, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(2, 12), st.just(2)), elements=st.floats(-50, 50)),
    st.integers(2, 40),
)
def test_resample_never_lengthens(c, T):
    out = resample_edge(c, T)
    assert out.shape == (T, 2)
    assert edge_length(out) <= edge_length(c) * (1 + 1e-9) + 1e-9
    assert np.array_equal(out[0], c[0]) and np.array_equal(out[-1], c[-1])
