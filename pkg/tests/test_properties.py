"""Hypothesis-driven properties checked against the brute-force oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varlib.dyadictree import lus2_decompose, sp_norm
from varlib.funcmodel import LinearCombo, piecewise_linear
from varlib.oracles import brute_lus2_best, brute_sp_norm, brute_v2_sq, tree_nodes
from varlib.varnorm import v2_norm

values = st.floats(-10, 10, allow_nan=False, width=32)


@st.composite
def grid_models(draw):
    n = draw(st.integers(1, 12))
    ys = [0.0] + draw(st.lists(values, min_size=n, max_size=n))
    return piecewise_linear(np.linspace(0, 1, n + 1), ys), ys


@st.composite
def tree_vectors(draw, max_depth=4, low=-5.0):
    d = draw(st.integers(0, max_depth))
    nodes = tree_nodes(d)
    vals = draw(st.lists(st.floats(low, 5, allow_nan=False), min_size=len(nodes), max_size=len(nodes)))
    return d, dict(zip(nodes, vals))


@settings(max_examples=200, deadline=None)
@given(grid_models())
def test_norm_matches_subset_search(model):
    f, ys = model
    assert v2_norm(f).value == pytest.approx(brute_v2_sq(ys), rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(grid_models(), st.floats(-4, 4, allow_nan=False))
def test_norm_is_homogeneous(model, lam):
    f, _ = model
    base = v2_norm(f).norm
    assert v2_norm(LinearCombo(((lam, f),))).norm == pytest.approx(abs(lam) * base, rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(grid_models(), grid_models())
def test_norm_triangle(a, b):
    f, g = a[0], b[0]
    assert v2_norm(f + g).norm <= v2_norm(f).norm + v2_norm(g).norm + 1e-9


@settings(max_examples=200, deadline=None)
@given(tree_vectors(), st.sampled_from([1.0, 2.0, 3.0]))
def test_tree_norm_matches_antichains(tv, p):
    d, x = tv
    assert sp_norm(x, p)[0] == pytest.approx(brute_sp_norm(x, d, p), rel=1e-9, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(tree_vectors(max_depth=3, low=0.0), st.data())
def test_lus2_holds_within_exhaustive_best(tv, data):
    d, alpha = tv
    lam = {s: data.draw(st.floats(0, 5, allow_nan=False)) for s in alpha}
    res = lus2_decompose(alpha, lam, d)
    assert res.holds
    assert res.rhs <= brute_lus2_best(alpha, lam, d) + 1e-9
