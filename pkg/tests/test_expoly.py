from __future__ import annotations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from ruinlab.expoly import ExpPoly

terms = st.lists(st.tuples(st.floats(-3, 3), st.integers(0, 3), st.floats(0.5, 6.0)), min_size=1, max_size=4)


def close(a, b, tol=1e-8):
    return abs(a - b) <= tol * max(1.0, abs(b))


@settings(max_examples=60, deadline=None)
@given(terms, st.floats(0.0, 2.0), st.floats(0.01, 2.0))
def test_integral_matches_quadrature(t, lo, width):
    f = ExpPoly(t)
    assert close(f.integral(lo, lo + width), quad(f, lo, lo + width)[0])
    assert close(f.integral(lo, np.inf), quad(f, lo, np.inf)[0])


@settings(max_examples=60, deadline=None)
@given(terms, st.floats(0.0, 2.0))
def test_tail_and_shift(t, x):
    f = ExpPoly(t)
    assert close(f.tail()(x), quad(f, x, np.inf)[0])
    assert close(f.shift(0.7)(x), f(x + 0.7))


@settings(max_examples=60, deadline=None)
@given(terms, terms, st.floats(0.0, 2.0))
def test_product_and_sum(t1, t2, x):
    f, g = ExpPoly(t1), ExpPoly(t2)
    assert close((f * g)(x), f(x) * g(x))
    assert close((f + g)(x), f(x) + g(x))
    assert close((f - f)(x), 0.0)


@settings(max_examples=60, deadline=None)
@given(terms, st.floats(0.1, 5.0), st.floats(0.0, 1.5))
def test_laplace_shift(t, lam, x):
    f = ExpPoly(t)
    ref = quad(lambda v: np.exp(-lam * v) * f(x + v), 0, np.inf)[0]
    assert close(f.laplace_shift(lam)(x), ref)


@settings(max_examples=60, deadline=None)
@given(terms, st.floats(0.5, 8.0), st.floats(0.01, 1.0), st.floats(0.0, 1.0))
def test_conv_exp(t, rate, u, y):
    f = ExpPoly(t)
    ref = quad(lambda w: np.exp(-rate * (u - w)) * f(y + w), 0, u)[0]
    assert close(f.conv_exp(rate, u)(y), ref)


def test_conv_exp_resonant_rate():
    f = ExpPoly([(2.0, 1, 3.0)])
    ref = quad(lambda w: np.exp(-3.0 * (0.4 - w)) * f(0.2 + w), 0, 0.4)[0]
    assert close(f.conv_exp(3.0, 0.4)(0.2), ref)


def test_like_terms_merge_and_cancel():
    f = ExpPoly([(1.0, 0, 2.0), (2.0, 0, 2.0), (-3.0, 0, 2.0), (1.0, 1, 1.0)])
    assert f.terms == [(1.0, 1, 1.0)]
    assert ExpPoly.const(2.5)(np.array([0.0, 4.0])).tolist() == [2.5, 2.5]
