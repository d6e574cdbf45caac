"""Randomized invariants (hypothesis)."""
from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from distort_stop.embedding import barycenter
from distort_stop.model import CurvePayoff, DistortionFn, PayoffFn, TransformedPayoff
from distort_stop.oracle import StepCdf, check_reconstruction, decompose_n_step
from distort_stop.quantile import Cdf, cdf_of, choquet_value_dist, choquet_value_quantile, left_inverse

SQRT2 = TransformedPayoff(PayoffFn.power(0.5), 1.0)
LINEAR = CurvePayoff(lambda x: x, lambda x: np.ones_like(x), "linear")


@st.composite
def step_laws(draw, max_n=6):
    n = draw(st.integers(2, max_n))
    pts = sorted(draw(st.lists(st.floats(0.05, 20.0), min_size=n, max_size=n, unique=True)))
    lv = sorted(draw(st.lists(st.floats(0.01, 0.99), min_size=n - 1, max_size=n - 1, unique=True)))
    return Cdf.steps(pts, lv)


@st.composite
def rational_steps(draw, max_n=7):
    n = draw(st.integers(2, max_n))
    pts = sorted(draw(st.sets(st.integers(1, 400), min_size=n, max_size=n)))
    lv = sorted(draw(st.lists(st.integers(1, 59), min_size=n - 1, max_size=n - 1)))
    return StepCdf(tuple(Fraction(a, 20) for a in pts), tuple(Fraction(c, 60) for c in lv))


distortions = st.sampled_from(
    [DistortionFn.power(0.6), DistortionFn.power(1.7), DistortionFn.identity(), DistortionFn.reverse_s_quadratic(0.5)]
)


@settings(max_examples=60, deadline=None)
@given(step_laws(), distortions)
def test_duality_on_step_laws(F, w):
    a = choquet_value_dist(F, SQRT2, w)
    b = choquet_value_quantile(left_inverse(F), SQRT2, w)
    assert abs(a - b) <= 1e-9 * max(1.0, abs(a))


@settings(max_examples=60, deadline=None)
@given(step_laws())
def test_left_inverse_galois(F):
    G = left_inverse(F)
    p = np.linspace(0.005, 0.995, 199)
    x = G(p)
    assert np.all(F(x) >= p - 1e-12)
    assert np.all(np.diff(x) >= 0)
    np.testing.assert_array_equal(left_inverse(cdf_of(G))(p), x)


@settings(max_examples=40, deadline=None)
@given(step_laws())
def test_concave_distortion_dominates_expectation(F):
    plain = choquet_value_dist(F, LINEAR, DistortionFn.identity())
    assert choquet_value_dist(F, LINEAR, DistortionFn.power(0.5)) >= plain - 1e-12
    assert choquet_value_dist(F, LINEAR, DistortionFn.power(2.0)) <= plain + 1e-12
    assert abs(plain - F.mean()) <= 1e-10 * plain


@settings(max_examples=40, deadline=None)
@given(rational_steps())
def test_decomposition_is_exact(F):
    parts = decompose_n_step(F)
    assert sum(t for _, t in parts) == 1
    assert all(t > 0 and G.mean() == F.mean() for G, t in parts)
    assert all(len(G.support_points()) <= 2 for G, _ in parts)
    assert check_reconstruction(F, parts)


@settings(max_examples=30, deadline=None)
@given(step_laws(max_n=4))
def test_barycenter_monotone_and_above_diagonal(F):
    psi = barycenter(F)
    x = np.linspace(psi.m, psi.M, 200)
    v = psi(x)
    assert np.all(np.diff(v) >= -1e-9 * v.max())
    assert np.all(v >= x - 1e-9 * v.max())
    assert abs(psi(np.array(psi.m)) - F.mean()) <= 1e-9 * F.mean()
