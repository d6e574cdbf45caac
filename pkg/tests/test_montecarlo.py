import math

import numpy as np
import pytest
from scipy import stats

from distort_stop import _kernels
from distort_stop.embedding import BarycenterRule, DrawdownFraction, ExitInterval, HitLevel, HoldForever, StopNow, azema_yor_rule
from distort_stop.model import CurvePayoff, DistortionFn, MarketParams
from distort_stop.montecarlo import PathConfig, ks_distance, mc_choquet, run_rule, simulate_paths
from distort_stop.quantile import Cdf
from distort_stop.solver import solve_power_power

UNIT = MarketParams(0.0, 1.0, 1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        PathConfig(n_paths=0)
    with pytest.raises(ValueError):
        PathConfig(dt=0.0)
    with pytest.raises(ValueError):
        PathConfig(record="exact")
    assert PathConfig(dt=1e-4, t_cap=50).n_steps == 500_000


def test_terminal_law_is_exact():
    m = MarketParams(0.0, 0.2, 1.0)
    cfg = PathConfig(n_paths=100_000, dt=1.0, seed=11, antithetic=False)
    _, S = simulate_paths(m, cfg, horizon=1.0)
    ST = S[:, -1]
    se = ST.std(ddof=1) / math.sqrt(ST.size)
    assert abs(ST.mean() - 1.0) < 3 * se
    lv = np.log(ST)
    var_se = lv.var(ddof=1) * math.sqrt(2.0 / (lv.size - 1))
    assert abs(lv.var(ddof=1) - 0.04) < 3 * var_se


def test_antithetic_reduces_variance():
    m = MarketParams(0.0, 0.2, 1.0)
    plain = simulate_paths(m, PathConfig(n_paths=20_000, dt=1.0, antithetic=False), 1.0)[1][:, -1]
    anti = simulate_paths(m, PathConfig(n_paths=20_000, dt=1.0, antithetic=True), 1.0)[1][:, -1]
    se_plain = plain.std(ddof=1) / math.sqrt(plain.size)
    pairs = 0.5 * (anti[0::2] + anti[1::2])
    se_anti = pairs.std(ddof=1) / math.sqrt(pairs.size)
    assert se_anti < se_plain


def test_stop_now_report():
    rep = run_rule(StopNow(), UNIT, PathConfig(n_paths=1000), target=Cdf.point_mass(1.0))
    assert np.all(rep.values == 1.0) and rep.ks_to_target == 0.0
    assert rep.capped_fraction == 0.0 and rep.mean_stopped == 1.0


def test_hold_forever_is_all_capped():
    rep = run_rule(HoldForever(), UNIT, PathConfig(n_paths=200, dt=1e-2, t_cap=1.0))
    assert rep.capped_fraction == 1.0 and rep.stopped_samples.size == 0


def test_backends_agree_and_are_deterministic():
    if not _kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    cfg = PathConfig(n_paths=2000, dt=1e-3, seed=5)
    for rule in (DrawdownFraction(0.5), ExitInterval(0.6, 1.5), HitLevel(1.3)):
        a = run_rule(rule, UNIT, cfg, use_numba=True)
        b = run_rule(rule, UNIT, cfg, use_numba=False)
        c = run_rule(rule, UNIT, cfg, use_numba=True)
        np.testing.assert_allclose(a.values, b.values, rtol=1e-13)
        np.testing.assert_array_equal(a.times, b.times)
        np.testing.assert_array_equal(a.values, c.values)


def test_boundary_record_lands_on_barriers():
    cfg = PathConfig(n_paths=2000, dt=1e-3, record="boundary")
    rep = run_rule(ExitInterval(0.5, 2.0), UNIT, cfg)
    stopped = rep.stopped_samples
    assert set(np.unique(stopped)) <= {0.5, 2.0}
    grid = run_rule(ExitInterval(0.5, 2.0), UNIT, PathConfig(n_paths=2000, dt=1e-3))
    lo = grid.stopped_samples[grid.stopped_samples < 1.0]
    assert np.all(lo <= 0.5)


def test_exit_hit_frequency_short_run():
    rep = run_rule(ExitInterval(1.0, 3.0), MarketParams(0.0, 1.0, 2.0), PathConfig(n_paths=20_000, dt=1e-4))
    p, se = rep.extras["hit_low_fraction"], rep.extras["hit_low_se"]
    # grid monitoring pushes the barriers out by about 0.58 sigma sqrt(dt)
    assert abs(p - 0.5) < 3 * se + 0.004
    assert rep.mean_stopped <= 2.0 + 3 * rep.se_mean


def test_budget_inequality_for_rules():
    cfg = PathConfig(n_paths=4000, dt=1e-3, seed=3)
    for rule in (DrawdownFraction(0.5), DrawdownFraction(0.8), ExitInterval(0.7, 1.2), HitLevel(0.8)):
        rep = run_rule(rule, UNIT, cfg)
        assert rep.mean_stopped <= 1.0 + 3 * rep.se_mean


def test_drawdown_ks_refines_with_dt():
    F = solve_power_power(0.5, 0.75, 1.0).f_star
    ks = [run_rule(DrawdownFraction(0.5), UNIT, PathConfig(n_paths=20_000, dt=dt), target=F).ks_to_target for dt in (1e-2, 2.5e-3, 6.25e-4)]
    assert ks[0] > ks[1] > ks[2]


def test_azema_yor_two_point_matches_exit_rule():
    law = Cdf.steps([1.0, 4.0], [2.0 / 3.0])
    rule = azema_yor_rule(law, 2.0)
    assert isinstance(rule, BarycenterRule)
    m = MarketParams(0.0, 1.0, 2.0)
    cfg = PathConfig(n_paths=20_000, dt=1e-3)
    ay = run_rule(rule, m, cfg).stopped_samples
    ex = run_rule(ExitInterval(1.0, 4.0), m, cfg).stopped_samples
    assert stats.ks_2samp(ay, ex).statistic < 0.01


def test_mc_choquet_examples():
    u = CurvePayoff(lambda x: x, lambda x: np.ones_like(x), "linear")
    w2 = DistortionFn.power(2.0)
    assert mc_choquet(np.full(10, 2.5), u, w2) == pytest.approx(2.5)
    x = np.repeat([1.0, 3.0], 50_000)
    assert mc_choquet(x, u, w2) == pytest.approx(1.5, abs=1e-4)
    rng = np.random.default_rng(0)
    y = rng.exponential(size=1000)
    assert mc_choquet(y, lambda v: np.sqrt(v), DistortionFn.identity()) == pytest.approx(np.sqrt(y).mean(), rel=1e-12)


def test_ks_distance_with_atoms():
    F = Cdf.steps([1.0, 3.0], [0.5])
    assert ks_distance(np.repeat([1.0, 3.0], 10), F) == 0.0
    assert ks_distance(np.repeat([1.0, 3.0], [6, 4]), F) == pytest.approx(0.1)


def test_stopped_sample_csv(tmp_path):
    rep = run_rule(DrawdownFraction(0.5), UNIT, PathConfig(n_paths=10, dt=1e-3))
    rep.export_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "path_id,stop_time,stopped_value,capped_flag" and len(lines) == 11
    doc = rep.to_dict()
    assert doc["n_paths"] == 10 and 0.0 <= doc["capped_fraction"] <= 1.0


def test_degenerate_market_rejected():
    with pytest.raises(ValueError):
        run_rule(StopNow(), MarketParams(0.5, 1.0, 1.0), PathConfig(n_paths=4))
