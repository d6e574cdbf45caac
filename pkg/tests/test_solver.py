import math

import numpy as np
import pytest

from distort_stop.embedding import BarycenterRule, DrawdownFraction, ExitInterval, HitLevel, HoldForever, StopNow
from distort_stop.model import CurvePayoff, DistortionFn, MarketParams, PayoffFn, TransformedPayoff
from distort_stop.oracle import cell_weights, step_value
from distort_stop.quantile import choquet_value_dist, choquet_value_quantile
from distort_stop.solver import (
    ATTAINED,
    INFINITE,
    SUPREMUM,
    ProblemSpec,
    UnsupportedRegime,
    power_rsq_g,
    route,
    solve,
    solve_degenerate,
    solve_power_rsq,
    solve_power_power,
    solve_u,
    two_point_value,
)

ROOT2 = math.sqrt(2.0)


def linear():
    return CurvePayoff(lambda x: x, lambda x: np.ones_like(x), "linear")


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def test_route_table(sqrt2):
    s_u = TransformedPayoff(PayoffFn.s_power(2.0, 0.5, 1.0), 1.0)
    assert route(sqrt2, DistortionFn.power(0.75)) == "concave_concave"
    assert route(sqrt2, DistortionFn.power(2.0)) == "two_threshold"
    assert route(s_u, DistortionFn.power(2.0)) == "two_threshold"
    assert route(s_u, DistortionFn.reverse_s_quadratic()) == "sshaped_reverse_s"
    assert route(sqrt2, DistortionFn.s_quadratic()) == "concave_s"
    assert route(sqrt2, DistortionFn.reverse_s_quadratic(0.4)) == "concave_reverse_s"
    with pytest.raises(UnsupportedRegime):
        route(s_u, DistortionFn.s_quadratic())


def test_degenerate_market_dispatch():
    sol = solve(ProblemSpec(MarketParams(0.02, 0.2, 1.0), PayoffFn.power(0.5), DistortionFn.power(0.75)))
    assert sol.diagnostics["route"] == "degenerate"
    assert sol.status == INFINITE


# ---------------------------------------------------------------------------
# degenerate and nonincreasing
# ---------------------------------------------------------------------------


def test_degenerate_examples():
    assert solve_degenerate(PayoffFn.call(1.0), 1.0).value == math.inf
    sol = solve_degenerate(PayoffFn.exponential(1.0), 1.0)
    assert sol.status == SUPREMUM and sol.value == pytest.approx(1.0)
    assert not sol.rule.attained
    sol = solve_degenerate(PayoffFn.piecewise_linear([0.0, 2.0], [0.0, 2.0]), 1.0)
    assert sol.status == ATTAINED and sol.value == pytest.approx(2.0)
    assert sol.rule == HitLevel(2.0, True, True)


def test_nonincreasing_examples():
    w = DistortionFn.power(0.75)
    sol = solve_u(TransformedPayoff(PayoffFn.power(0.5), -1.0), w, 1.0)
    assert sol.value == math.inf and isinstance(sol.rule, HoldForever)
    u = CurvePayoff(lambda x: np.exp(-x), lambda x: -np.exp(-x), "nonincreasing", offset=0.0)
    sol = solve_u(u, w, 1.0)
    assert sol.status == SUPREMUM and sol.value == pytest.approx(1.0)
    assert isinstance(sol.rule, HoldForever)
    plateau = CurvePayoff(
        lambda x: np.where(x <= 1.0, 1.0, 1.0 / np.maximum(x, 1e-300)),
        lambda x: np.where(x < 1.0, 0.0, -1.0 / np.maximum(x, 1e-300) ** 2),
        "nonincreasing",
        offset=0.0,
    )
    sol = solve_u(plateau, w, 2.0)
    assert sol.status == ATTAINED and sol.value == pytest.approx(1.0)
    assert sol.rule == HitLevel(1.0)


# ---------------------------------------------------------------------------
# convex w and convex u
# ---------------------------------------------------------------------------


def test_concave_u_convex_w_stops_now(sqrt2):
    sol = solve_u(sqrt2, DistortionFn.power(2.0), 1.0)
    assert isinstance(sol.rule, StopNow) and sol.value == pytest.approx(2.0, abs=1e-12)


def test_linear_identity_ties_to_stop_now():
    sol = solve_u(linear(), DistortionFn.identity(), 1.0)
    assert isinstance(sol.rule, StopNow) and sol.value == pytest.approx(1.0)


def test_two_threshold_matches_grid():
    u = TransformedPayoff(PayoffFn.s_power(2.0, 0.5, 1.0), 1.0)
    w = DistortionFn.identity()
    s = 0.5
    sol = solve_u(u, w, s)
    a = s * np.linspace(1e-6, 1.0, 2000)
    b = np.linspace(s, 2.5, 2001)
    grid = np.nanmax(two_point_value(u, w, s, a[:, None], b[None, :]))
    assert sol.value == pytest.approx(grid, abs=1e-4)
    assert sol.value >= grid - 1e-12
    # the concave envelope of u at s is the chord through the origin and (1, 1)
    assert sol.value == pytest.approx(0.5, abs=1e-4)
    assert sol.rule.b == pytest.approx(1.0, abs=1e-3)


def test_two_threshold_attained_fixture():
    u = TransformedPayoff(PayoffFn.piecewise_linear([0.0, 0.3, 1.0, 1.5], [0.0, 0.6, 0.6, 1.6]), 1.0)
    sol = solve_u(u, DistortionFn.power(1.5), 0.8)
    assert sol.status == ATTAINED
    assert isinstance(sol.rule, ExitInterval)
    assert sol.rule.a == pytest.approx(0.3, rel=1e-6) and sol.rule.b == pytest.approx(1.5, rel=1e-6)


def test_convex_u_examples():
    w = DistortionFn.identity()
    call = TransformedPayoff(PayoffFn.call(1.0), 1.0)
    sol = solve_u(call, w, 1.0)
    assert sol.status == SUPREMUM and sol.value == pytest.approx(1.0, abs=1e-9)
    assert sol.diagnostics.get("b_to_infinity")
    sq = CurvePayoff(lambda x: x * x, lambda x: 2 * x, "convex")
    assert solve_u(sq, w, 1.0).value == math.inf
    sol = solve_u(linear(), DistortionFn.power(2.0), 1.0)
    assert isinstance(sol.rule, StopNow) and sol.value == pytest.approx(1.0)


def test_convex_u_one_and_two_dim_sups_agree():
    u = CurvePayoff(lambda x: x**1.5, lambda x: 1.5 * x**0.5, "convex")
    w = DistortionFn.power(2.0)
    s = 1.0
    sol = solve_u(u, w, s)
    a = s * np.linspace(1e-6, 1.0, 600)
    b = s * np.geomspace(1.0, 1e3, 600)
    two_d = np.nanmax(two_point_value(u, w, s, a[:, None], b[None, :]))
    x = np.geomspace(1e-6, 1.0, 20001)
    one_d = np.max(w(x) * u(s / x))
    assert sol.value == pytest.approx(one_d, rel=1e-6)
    assert two_d <= one_d + 1e-9 and two_d == pytest.approx(one_d, rel=1e-3)


# ---------------------------------------------------------------------------
# concave u
# ---------------------------------------------------------------------------


def test_concave_concave_closed_form(sqrt2, w75):
    sol = solve_u(sqrt2, w75, 1.0)
    assert sol.value == pytest.approx(3 / ROOT2, abs=1e-9)
    assert sol.params["lambda"] == pytest.approx(0.75 * ROOT2, abs=1e-9)
    x = np.linspace(0.01, 0.99, 30)
    np.testing.assert_allclose(sol.g_star(x), 0.5 * (1 - x) ** -0.5, rtol=1e-12)
    assert sol.rule == DrawdownFraction(0.5)


def test_concave_concave_generic_solver_matches_closed_form(sqrt2, w75):
    from distort_stop.solver import solve_concave_concave

    sol = solve_concave_concave(sqrt2, w75, 1.0)
    assert sol.value == pytest.approx(3 / ROOT2, rel=1e-6)
    assert sol.params["lambda"] == pytest.approx(0.75 * ROOT2, rel=1e-6)
    assert sol.g_star.budget() == pytest.approx(1.0, rel=1e-8)


def test_identity_w_switches_drawdown_to_stop_now(sqrt2):
    assert isinstance(solve_u(sqrt2, DistortionFn.identity(), 1.0).rule, StopNow)
    assert isinstance(solve_power_power(0.5, 1.0, 1.0).rule, StopNow)


def test_power_power_branches():
    sol = solve_power_power(0.5, 0.75, 1.0)
    assert sol.params["pareto_index"] == 2.0 and sol.params["eta"] == 0.5
    assert sol.params["lower_support"] == 0.5
    sol = solve_power_power(0.5, 0.3, 1.0)
    assert sol.status == INFINITE and not sol.rule.attained
    eta = sol.rule.eta
    assert 0.3 < (1 - eta) * 0.5
    sol = solve_power_power(0.5, 0.5, 1.0)
    assert sol.status == INFINITE
    np.testing.assert_allclose(sol.diagnostics["J_n"], 2.0 * np.array([1, 10, 100, 1000]) ** 0.5)


def test_power_rsq_values():
    sol = solve_power_rsq(0.3, 1.0)
    assert sol.params["cbar"] == pytest.approx(0.70, abs=0.01)
    assert sol.params["lambda"] == pytest.approx(1.0, abs=0.05)
    assert sol.params["g_half"] == pytest.approx((0.7 / 1.7) ** 0.7 * 2**0.3, rel=1e-9)
    for g in (0.1, 0.3, 0.5, 0.65):
        assert power_rsq_g(0.5 + 1e-12, g) < power_rsq_g(1.0, g)


def test_power_rsq_program_agrees_with_reduction():
    from distort_stop.solver import solve_concave_reverse_s

    u = TransformedPayoff(PayoffFn.power(0.3), 1.0)
    w = DistortionFn.reverse_s_quadratic()
    ref = solve_power_rsq(0.3, 1.0, u=u)
    prog = solve_concave_reverse_s(u, w, 1.0)
    assert prog.value == pytest.approx(ref.value, abs=1e-4)


def test_concave_s_caps_at_a(sqrt2):
    w = DistortionFn.s_quadratic(0.5)
    sol = solve_u(sqrt2, w, 1.0)
    assert sol.g_star.upper == pytest.approx(sol.params["a"])
    assert sol.value >= 2.0


def test_sshaped_program_floor_zero_is_flagged():
    u = TransformedPayoff(PayoffFn.s_power(2.0, 0.5, 1.0), 1.0)
    sol = solve_u(u, DistortionFn.reverse_s_quadratic(), 0.8)
    assert sol.status == SUPREMUM and sol.diagnostics["no_cut_loss_floor"]
    assert not sol.rule.attained


# ---------------------------------------------------------------------------
# solution invariants on a battery of instances
# ---------------------------------------------------------------------------


def _battery():
    sq = TransformedPayoff(PayoffFn.power(0.5), 1.0)
    p3 = TransformedPayoff(PayoffFn.power(0.3), 1.0)
    return [
        ("cc", sq, DistortionFn.power(0.75), 1.0),
        ("cc-s2", sq, DistortionFn.power(0.6), 2.0),
        ("ex52", p3, DistortionFn.reverse_s_quadratic(), 1.0),
        ("crs", sq, DistortionFn.reverse_s_quadratic(0.4), 1.0),
        ("cs", sq, DistortionFn.s_quadratic(0.5), 1.0),
        ("tt", TransformedPayoff(PayoffFn.piecewise_linear([0.0, 0.3, 1.0, 1.5], [0.0, 0.6, 0.6, 1.6]), 1.0), DistortionFn.power(1.5), 0.8),
    ]


@pytest.mark.parametrize("name, u, w, s", _battery(), ids=lambda v: v if isinstance(v, str) else "")
def test_solution_invariants(name, u, w, s):
    sol = solve_u(u, w, s)
    G = sol.g_star
    assert G.budget() <= s * (1 + 1e-9)
    jq = choquet_value_quantile(G, u, w) + sol.offset
    assert jq == pytest.approx(sol.value, rel=1e-6)
    if sol.f_star is not None:
        jd = choquet_value_dist(sol.f_star, u, w) + sol.offset
        assert jd == pytest.approx(jq, rel=1e-8, abs=1e-8)
    # no random feasible step quantile beats the solver
    rng = np.random.default_rng(7)
    n = 50
    omega = cell_weights(w, n)
    lv = np.sort(rng.exponential(1.0, size=(10_000, n)) ** rng.uniform(0.2, 3.0, size=(10_000, 1)), axis=1)
    lv *= s / lv.mean(axis=1, keepdims=True)
    best = float(np.max(step_value(lv, u, omega))) + sol.offset
    assert best <= sol.value * (1 + 1e-9)
