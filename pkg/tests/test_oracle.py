import json
import math
from fractions import Fraction as Fr

import numpy as np
import pytest

from distort_stop.model import CurvePayoff, DistortionFn, PayoffFn, TransformedPayoff
from distort_stop.oracle import (
    StepCdf,
    StepQuantile,
    brute_force_quantile,
    check_reconstruction,
    decompose_n_step,
    decompose_three_step,
    level_grid,
    random_step_cdf,
)
from distort_stop.solver import solve_two_threshold


def test_level_grid_contains_s():
    L = level_grid(0.8)
    assert 0.8 in L and L[0] == pytest.approx(0.8e-3) and L[-1] == pytest.approx(0.8e3)


def test_concave_convex_gives_u_of_s(sqrt2):
    r = brute_force_quantile(sqrt2, DistortionFn.power(2.0), 1.0)
    assert r.value == pytest.approx(2.0, abs=1e-9)


def test_power_power_within_one_percent(sqrt2, w75):
    r = brute_force_quantile(sqrt2, w75, 1.0, n=200)
    assert r.value == pytest.approx(3 / math.sqrt(2), rel=0.01)
    assert r.value <= 3 / math.sqrt(2)
    assert r.quantile.budget() <= 1.0 + 1e-12


def test_linear_identity_equals_s(identity_u):
    w = DistortionFn.identity()
    assert brute_force_quantile(identity_u, w, 1.3).value == pytest.approx(1.3, abs=1e-12)
    assert StepQuantile(np.array([0.3, 1.0, 2.6])).value(identity_u, w) == pytest.approx(1.3)


def test_infinite_value_suspected(sqrt2):
    r = brute_force_quantile(sqrt2, DistortionFn.power(0.3), 1.0, n=200)
    assert r.diagnostics["infinite_suspected"]
    r = brute_force_quantile(sqrt2, DistortionFn.power(0.75), 1.0, n=200)
    assert not r.diagnostics["infinite_suspected"]


def test_two_cell_oracle_matches_two_threshold():
    u = TransformedPayoff(PayoffFn.s_power(2.0, 0.5, 1.0), 1.0)
    w = DistortionFn.power(1.5)
    s = 0.8
    sol = solve_two_threshold(u, w, s)
    r = brute_force_quantile(u, w, s, n=2, level_grid_=np.geomspace(1e-4, 1e3, 4000), mode="two_level")
    # n = 2 forces equal masses, a restriction of the two-point family
    assert r.value <= sol.value + 1e-9


def test_oracle_json_is_stable(sqrt2, w75, tmp_path):
    r1 = brute_force_quantile(sqrt2, w75, 1.0, n=50)
    r2 = brute_force_quantile(sqrt2, w75, 1.0, n=50)
    assert r1.to_json() == r2.to_json()
    doc = json.loads(r1.to_json(tmp_path / "o.json"))
    assert {"mode", "n", "value"} <= set(doc)


# ---------------------------------------------------------------------------
# step-CDF decompositions
# ---------------------------------------------------------------------------


def test_three_step_upper_branch():
    F = StepCdf((1, 2, 4), (Fr(3, 10), Fr(3, 5)))
    assert F.mean() == Fr(5, 2)
    F1, F2, th = decompose_three_step(F)
    assert th == Fr(3, 5)
    assert F1 == StepCdf((1, 4), (Fr(1, 2),))
    assert F2 == StepCdf((2, 4), (Fr(3, 4),))
    assert F1.mean() == F2.mean() == Fr(5, 2)
    assert check_reconstruction(F, [(F1, th), (F2, 1 - th)])


def test_three_step_lower_branch():
    F = StepCdf((1, 2, 4), (Fr(1, 2), Fr(4, 5)))
    s0 = F.mean()
    assert s0 == Fr(19, 10)
    F1, F2, th = decompose_three_step(F)
    a1, a2, a3 = 1, 2, 4
    b1, b2 = (a3 - s0) / (a3 - a1), (a2 - s0) / (a2 - a1)
    assert F1.levels[0] == b1 and F2.levels[0] == b2
    theta2 = (Fr(4, 5) - Fr(1, 2)) / (1 - b2)
    assert 1 - th == theta2
    assert check_reconstruction(F, [(F1, th), (F2, 1 - th)])


def test_two_level_identity():
    F = StepCdf((1, 3), (Fr(1, 2),))
    F1, F2, th = decompose_three_step(F)
    assert th == 1 and F1 == F and F2 == F
    assert decompose_n_step(F) == [(F, Fr(1))]


@pytest.mark.parametrize("n", [3, 4, 5, 7])
def test_random_n_step_exact(n):
    rng = np.random.default_rng(n)
    for _ in range(25):
        F = random_step_cdf(rng, n)
        parts = decompose_n_step(F)
        assert sum(t for _, t in parts) == 1
        assert all(G.n <= 2 and G.mean() == F.mean() for G, _ in parts)
        assert check_reconstruction(F, parts)


def test_convexity_inequality():
    u = CurvePayoff(lambda x: x**1.5, lambda x: 1.5 * x**0.5, "convex")
    w = DistortionFn.power(2.0)
    rng = np.random.default_rng(3)
    for _ in range(40):
        F = random_step_cdf(rng, int(rng.integers(3, 7)))
        parts = decompose_n_step(F)
        vals = [G.value(u, w) for G, _ in parts]
        mix = sum(float(t) * v for (_, t), v in zip(parts, vals))
        assert F.value(u, w) <= mix + 1e-9 <= max(vals) + 2e-9
