import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from hyperctrl.piecewise import PiecewiseAffine, PiecewiseConstant, PiecewiseExp, merge_breakpoints


@st.composite
def step_functions(draw, lo=-2.0, hi=3.0, max_pieces=6):
    k = draw(st.integers(1, max_pieces))
    cuts = draw(st.lists(st.floats(lo + 1e-3, hi - 1e-3), min_size=k - 1, max_size=k - 1))
    b = merge_breakpoints(cuts, lo, hi)
    vals = draw(st.lists(st.floats(-5, 5), min_size=b.size - 1, max_size=b.size - 1))
    return PiecewiseConstant(b, vals)


def quad_integral(f, lo, hi):
    """Adaptive quadrature told where the jumps are."""
    pts = [p for p in f.breakpoints if lo < p < hi]
    return quad(lambda x: float(f(x)), lo, hi, points=pts or None, limit=200)[0]


def test_right_continuous_and_zero_outside():
    f = PiecewiseConstant([0.0, 1.0, 2.0], [3.0, -1.0])
    assert f(1.0) == -1.0
    assert f(0.999) == 3.0
    assert f(2.0) == -1.0
    assert f(-0.1) == 0.0 and f(2.1) == 0.0


def test_rejects_bad_breakpoints():
    with pytest.raises(ValueError):
        PiecewiseConstant([0.0, 0.0, 1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        PiecewiseConstant([0.0, 1.0], [1.0, 2.0])


@given(step_functions())
def test_integral_matches_quadrature(f):
    assert f.integral() == pytest.approx(quad_integral(f, -2.0, 3.0), abs=1e-9)


@given(step_functions(), st.floats(-3, 3))
def test_shift_moves_graph(f, c):
    g = f.shift(c)
    xs = np.linspace(-1.9, 2.9, 37) + c + 1e-7
    assert np.allclose(g(xs), f(xs - c))
    assert g.integral() == pytest.approx(f.integral(), abs=1e-12)


@given(step_functions(), step_functions())
def test_inner_matches_quadrature(f, g):
    ref = quad_integral(f * g, -2.0, 3.0)
    assert f.inner(g) == pytest.approx(ref, abs=1e-8)


@given(step_functions(), step_functions())
def test_sum_is_pointwise(f, g):
    h = f + g
    xs = np.random.default_rng(0).uniform(-2, 3, 50)
    assert np.allclose(h(xs), f(xs) + g(xs))


@given(step_functions(), st.sampled_from([1.0, 2.0, 3.5]))
def test_lq_norm_matches_quadrature(f, q):
    ref = quad(lambda x: abs(float(f(x))) ** q, -2.0, 3.0,
               points=list(f.breakpoints[1:-1]) or None, limit=200)[0] ** (1 / q)
    assert f.lq_norm(q) == pytest.approx(ref, rel=1e-8, abs=1e-10)


def test_restrict_and_dict_round_trip():
    f = PiecewiseConstant([0.0, 0.5, 2.0], [1.0, 4.0])
    r = f.restrict(0.25, 1.0)
    assert r.domain == (0.25, 1.0)
    assert r.integral() == pytest.approx(0.25 * 1.0 + 0.5 * 4.0)
    g = PiecewiseConstant.from_dict(f.to_dict())
    assert np.array_equal(g.breakpoints, f.breakpoints) and np.array_equal(g.values, f.values)


def test_merge_breakpoints_collapses_near_duplicates():
    b = merge_breakpoints([0.5, 0.5 + 1e-15, 0.7], 0.0, 1.0)
    assert list(b) == [0.0, 0.5, 0.7, 1.0]


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=4),
       st.lists(st.floats(-2, 2), min_size=1, max_size=4))
def test_exp_integral_closed_form(vals, rates):
    k = min(len(vals), len(rates))
    b = np.linspace(0.0, 1.0, k + 1)
    f = PiecewiseExp(b, vals[:k], rates[:k])
    ref = sum(quad(lambda x, j=j: vals[j] * math.exp(rates[j] * (x - b[j])), b[j], b[j + 1])[0]
              for j in range(k))
    assert f.integral() == pytest.approx(ref, abs=1e-10)
    ref2 = sum(quad(lambda x, j=j: (vals[j] * math.exp(rates[j] * (x - b[j]))) ** 2, b[j], b[j + 1])[0]
               for j in range(k)) ** 0.5
    assert f.lq_norm(2.0) == pytest.approx(ref2, abs=1e-10)


def test_affine_antiderivative_and_inverse():
    f = PiecewiseConstant([0.0, 0.5, 1.0], [1.0, 2.0])
    F = PiecewiseAffine.antiderivative(f)
    assert F(0.5) == pytest.approx(0.5)
    assert F(1.0) == pytest.approx(1.5)
    ys = np.linspace(0.0, 1.5, 11)
    assert np.allclose(F(F.inverse(ys)), ys)
    G = PiecewiseAffine(F.knots, 1.5 - F.vals)
    assert np.allclose(G(G.inverse(ys)), ys)
