import numpy as np
import pytest

from distort_stop.model import (
    DistortionFn,
    MarketParams,
    ModelError,
    PayoffFn,
    ShapeError,
    TransformedPayoff,
    compute_beta,
    expected_shape,
    transform_payoff,
    verify_distortion,
    verify_payoff_shape,
)


@pytest.mark.parametrize(
    "mu, sigma, beta",
    [(0.0, 0.2, 1.0), (0.05, 0.2, -1.5), (0.02, 0.2, 0.0)],
)
def test_compute_beta(mu, sigma, beta):
    m = MarketParams(mu, sigma, 1.0)
    assert compute_beta(m) == pytest.approx(beta, abs=1e-12)
    assert m.degenerate == (beta == 0.0)


def test_market_invariants():
    with pytest.raises(ModelError):
        MarketParams(0.0, 0.0, 1.0)
    with pytest.raises(ModelError):
        MarketParams(0.0, 0.2, -1.0)
    with pytest.raises(ModelError):
        MarketParams(0.02, 0.2, 1.0).s
    assert MarketParams(0.0, 0.2, 3.0).s == pytest.approx(3.0)


def test_transform_call_convex():
    u = transform_payoff(PayoffFn.call(1.0), 0.5)
    assert u.shape == "convex"
    x = np.array([0.5, 1.0, 2.0, 3.0])
    np.testing.assert_allclose(u(x), np.maximum(x**2 - 1.0, 0.0), atol=1e-12)


def test_transform_power_concave_and_nonincreasing():
    u = transform_payoff(PayoffFn.power(0.5), 2.0)
    assert u.shape == "concave"
    x = np.array([0.1, 1.0, 16.0])
    np.testing.assert_allclose(u(x), 2.0 * x**0.25)
    v = transform_payoff(PayoffFn.power(0.5), -1.0)
    assert v.shape == "nonincreasing"
    np.testing.assert_allclose(v(x), 2.0 * x**-0.5)
    assert v.u0plus() == np.inf


@pytest.mark.parametrize(
    "kind, beta, params, shape",
    [
        ("call", 2.0, {"K": 1.0}, "s_shaped"),
        ("log", 0.5, {}, "s_shaped"),
        ("s_power", 1.0, {"alpha1": 2.0, "alpha2": 0.5, "k": 1.0}, "s_shaped"),
        ("call", 0.7, {"K": 1.0}, "convex"),
        ("power", 0.3, {"gamma": 0.5}, "convex"),
        ("exponential", 2.0, {"alpha": 1.0}, "concave"),
        ("log", -1.0, {}, "nonincreasing"),
    ],
)
def test_expected_shape_table(kind, beta, params, shape):
    assert expected_shape(kind, beta, params)[0] == shape


CATALOG = [
    PayoffFn.call(1.0),
    PayoffFn.power(0.5),
    PayoffFn.log(),
    PayoffFn.exponential(1.0),
    PayoffFn.s_power(2.0, 0.5, 1.0),
]


@pytest.mark.parametrize("U", CATALOG, ids=lambda U: U.kind)
@pytest.mark.parametrize("beta", [-2.0, -0.5, 0.6, 1.0, 1.5, 3.0])
def test_numeric_shape_agrees_with_catalog(U, beta):
    shape, _ = expected_shape(U.kind, beta, U.params)
    if shape in ("piecewise_convex", "generic"):
        pytest.skip("no global shape to verify")
    u = TransformedPayoff(U, beta)
    assert u.shape == shape
    assert verify_payoff_shape(u)
    x = np.geomspace(1e-3, 1e3, 200)
    d = np.diff(u(x))
    assert np.all(d >= -1e-12) if beta > 0 else np.all(d <= 1e-12)


def test_wrong_declared_shape_reports_points():
    with pytest.raises(ShapeError) as exc:
        transform_payoff(PayoffFn.power(0.5), 2.0, declared_shape="convex")
    assert exc.value.violations


def test_payoff_param_validation():
    with pytest.raises(ModelError):
        PayoffFn.power(1.5)
    with pytest.raises(ModelError):
        PayoffFn.call(0.0)
    with pytest.raises(ModelError):
        PayoffFn.s_power(0.5, 0.8, 1.0)
    with pytest.raises(ModelError):
        PayoffFn.piecewise_linear([0, 1, 1], [0, 1, 2])


def test_offset_normalization():
    u = TransformedPayoff(PayoffFn.exponential(1.0), 1.0)
    assert u.offset == pytest.approx(0.0)
    p = TransformedPayoff(PayoffFn.piecewise_linear([0.0, 1.0], [0.5, 1.0], tail_slope=0.0), 1.0)
    assert p.offset == pytest.approx(0.5)
    assert float(p(0.0)) == pytest.approx(0.0)


@pytest.mark.parametrize(
    "w",
    [
        DistortionFn.identity(),
        DistortionFn.power(0.5),
        DistortionFn.power(2.0),
        DistortionFn.reverse_s_quadratic(),
        DistortionFn.s_quadratic(0.3),
    ],
    ids=lambda w: w.kind,
)
def test_distortion_endpoints_and_monotone(w):
    assert float(w(0.0)) == 0.0 and float(w(1.0)) == 1.0
    p = np.linspace(0.0, 1.0, 1001)
    assert np.all(np.diff(w(p)) > 0)
    verify_distortion(w)


def test_reverse_s_quadratic_values():
    w = DistortionFn.reverse_s_quadratic()
    assert float(w(0.5)) == 0.5
    assert float(w.deriv(0.0)) == pytest.approx(2.0)
    assert float(w.deriv(1.0)) == pytest.approx(2.0)
    assert float(w.deriv(0.5)) == 0.0
    assert float(w.deriv(0.5 - 1e-9)) == pytest.approx(0.0, abs=1e-8)
    assert float(w.deriv(0.5 + 1e-9)) == pytest.approx(0.0, abs=1e-8)
    assert w.shape == "reverse_s" and w.q == 0.5


def test_power_distortion_shapes():
    assert DistortionFn.power(0.5).shape == "concave"
    assert DistortionFn.power(2.0).shape == "convex"
    assert DistortionFn.power(1.0).shape == "linear"
    with pytest.raises(ModelError):
        DistortionFn.power(0.0)


def test_unknown_distortion_kind():
    with pytest.raises(ModelError, match="expected one of"):
        DistortionFn("powr", {})
