"""Threshold-type regimes: degenerate drift, nonincreasing u, convex w and convex u."""
from __future__ import annotations

import math

import numpy as np
from scipy import optimize

from ..embedding import ExitInterval, HitLevel, HoldForever, StopNow
from ..model import PayoffCurve, PayoffFn
from ..quantile import Cdf, QuantileFn
from .base import ATTAINED, INFINITE, SUPREMUM, SolverOptions, finish


def _stop_now(case, u, s, **diag):
    v = float(u(s))
    return finish(
        case,
        v,
        ATTAINED,
        s,
        StopNow(),
        u,
        g_star=QuantileFn.constant(s),
        f_star=Cdf.point_mass(s),
        params={"a": s, "b": s},
        diagnostics=diag,
    )


# ---------------------------------------------------------------------------
# mu = sigma^2 / 2
# ---------------------------------------------------------------------------


def solve_degenerate(U: PayoffFn, p0: float = None):
    """``ln P`` is a driftless Brownian motion: every level is reached, the value is ``sup U``."""
    sup = U.sup_value()
    x_star = U.argsup()
    if math.isinf(sup):
        return finish(
            "degenerate",
            math.inf,
            INFINITE,
            math.nan,
            HitLevel(math.inf, attained=False, on_price=True),
            params={"x_star": math.inf},
            diagnostics={"maximizing_sequence": "stop at the first hitting time of x_n, x_n -> inf"},
        )
    if x_star is None:
        return finish(
            "degenerate",
            sup,
            SUPREMUM,
            math.nan,
            HitLevel(math.inf, attained=False, on_price=True),
            params={"x_star": math.inf},
            diagnostics={"maximizing_sequence": "stop at the first hitting time of x_n, x_n -> inf"},
        )
    rule = StopNow() if p0 is not None and float(U(p0)) >= sup else HitLevel(x_star, on_price=True)
    return finish("degenerate", sup, ATTAINED, math.nan, rule, params={"x_star": x_star})


# ---------------------------------------------------------------------------
# nonincreasing u
# ---------------------------------------------------------------------------


def solve_nonincreasing(u: PayoffCurve, s: float):
    """Value ``u(0+)``; attained by stopping at a level where ``u`` already equals ``u(0+)``."""
    top = float(u.u0plus())
    if math.isinf(top):
        return finish("nonincreasing", math.inf, INFINITE, s, HoldForever(), u, diagnostics={"u0plus": math.inf})
    target = top - u.offset
    ell = _plateau_end(u, target, s)
    if ell is None:
        return finish(
            "nonincreasing",
            target,
            SUPREMUM,
            s,
            HoldForever(),
            u,
            diagnostics={"limit": "J(T) increases to u(0+) as T -> inf"},
        )
    if ell >= s:
        return _stop_now("nonincreasing", u, s)
    return finish(
        "nonincreasing",
        target,
        ATTAINED,
        s,
        HitLevel(ell),
        u,
        g_star=QuantileFn.constant(ell),
        f_star=Cdf.point_mass(ell),
        params={"level": ell},
    )


def _plateau_end(u, target, s):
    """Largest ``l`` with ``u(l) = u(0+)`` (u nonincreasing), or None.

    For catalog payoffs the plateau is exact: it exists iff ``U`` attains its
    supremum at a finite price ``y*``, and then ``l = y*^beta``.  Other curves
    are scanned for exact equality.
    """
    source = getattr(u, "source", None)
    if source is not None:
        y_star = source.argsup()
        if y_star is None:
            return None
        return float(y_star) ** u.beta
    xs = np.geomspace(s * 1e-12, s * 1e12, 2401)
    ok = np.asarray(u(xs), dtype=float) >= target
    if not ok.any():
        return None
    j = int(np.nonzero(ok)[0].max())
    if j == xs.size - 1:
        return math.inf
    lo, hi = xs[j], xs[j + 1]
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if float(u(mid)) >= target:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1 < 1e-15:
            break
    return lo


# ---------------------------------------------------------------------------
# convex w: two thresholds
# ---------------------------------------------------------------------------


def two_point_value(u, w, s, a, b):
    """``(1 - w(c)) u(a) + w(c) u(b)`` with ``c = (s - a)/(b - a)`` (vectorized, ``a <= s <= b``)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    width = b - a
    safe = np.where(width > 0, width, 1.0)
    c = np.where(width > 0, (s - a) / safe, 0.0)
    wc = w(c)
    ua = np.where(a > 0, u(np.maximum(a, 1e-300)), 0.0)
    return (1.0 - wc) * ua + wc * u(b)


def solve_two_threshold(u: PayoffCurve, w, s: float, opts: SolverOptions = SolverOptions()):
    """Maximize the two-point value over ``0 < a <= s <= b`` (convex w, any nondecreasing u)."""
    n_a, n_b = opts.grid_a, opts.grid_b
    lo_exp, hi_exp = -4.0, 4.0
    floor_exp = math.log10(opts.a_floor_min)
    cap_exp = math.log10(opts.b_cap_max)
    history = []
    while True:
        a_grid = s * np.logspace(lo_exp, 0.0, n_a)
        b_grid = s * np.logspace(0.0, hi_exp, n_b)
        H = two_point_value(u, w, s, a_grid[:, None], b_grid[None, :])
        H = np.where(np.isnan(H), -np.inf, H)
        k = int(np.argmax(H))
        i, j = divmod(k, n_b)
        history.append((lo_exp, hi_exp, float(H[i, j])))
        grow_b = j == n_b - 1 and hi_exp < cap_exp
        grow_a = i == 0 and lo_exp > floor_exp and a_grid[0] < s
        if not (grow_a or grow_b):
            break
        if grow_b:
            hi_exp += 1.0
        if grow_a:
            lo_exp -= 1.0
    best = float(H[i, j])
    u_s = float(u(s))
    tol = opts.tie_tol * max(1.0, abs(u_s))
    diag = {"grid": [n_a, n_b], "a_range": [float(a_grid[0]), s], "b_range": [s, float(b_grid[-1])], "escalations": len(history) - 1}
    if best <= u_s + tol:
        return _stop_now("two_threshold", u, s, **diag)

    b_inf = j == n_b - 1
    a_zero = i == 0 and a_grid[0] < s
    if b_inf or a_zero:
        if a_zero and not b_inf:
            # the limit a -> 0 is the one-sided rule: sup_b w(s/b) u(b)
            b_star, v = _refine_one_sided(u, w, s, b_grid[max(j - 1, 0)], b_grid[min(j + 1, n_b - 1)])
            v = max(v, best)
        else:
            b_star, v = math.inf, best
        diag.update({"a_to_zero": bool(a_zero), "b_to_infinity": bool(b_inf)})
        return finish(
            "two_threshold",
            v,
            SUPREMUM,
            s,
            ExitInterval(0.0, b_star, attained=False),
            u,
            params={"a": 0.0 if a_zero else float(a_grid[i]), "b": b_star},
            diagnostics=diag,
        )

    a_star, b_star = float(a_grid[i]), float(b_grid[j])
    a_lo, a_hi = float(a_grid[max(i - 1, 0)]), float(a_grid[min(i + 1, n_a - 1)])
    b_lo, b_hi = float(b_grid[max(j - 1, 0)]), float(b_grid[min(j + 1, n_b - 1)])
    f = lambda a, b: float(two_point_value(u, w, s, a, b))
    val = f(a_star, b_star)
    for _ in range(4):
        ra = optimize.minimize_scalar(
            lambda a: -f(a, b_star), bounds=(a_lo, a_hi), method="bounded",
            options={"xatol": 1e-12 * s, "maxiter": opts.golden_iters},
        )
        if -ra.fun > val:
            a_star, val = float(ra.x), -float(ra.fun)
        rb = optimize.minimize_scalar(
            lambda b: -f(a_star, b), bounds=(b_lo, b_hi), method="bounded",
            options={"xatol": 1e-12 * s, "maxiter": opts.golden_iters},
        )
        if -rb.fun > val:
            b_star, val = float(rb.x), -float(rb.fun)
    if val <= u_s + tol:
        return _stop_now("two_threshold", u, s, **diag)
    c_star = (b_star - s) / (b_star - a_star)
    G = QuantileFn.steps([0.0, c_star, 1.0], [a_star, b_star])
    F = Cdf.steps([a_star, b_star], [c_star])
    return finish(
        "two_threshold",
        val,
        ATTAINED,
        s,
        ExitInterval(a_star, b_star),
        u,
        g_star=G,
        f_star=F,
        params={"a": a_star, "b": b_star, "c": c_star},
        diagnostics=diag,
    )


def _refine_one_sided(u, w, s, b_lo, b_hi):
    g = lambda b: float(w(s / b) * u(b))
    res = optimize.minimize_scalar(lambda t: -g(math.exp(t)), bounds=(math.log(b_lo), math.log(b_hi)), method="bounded")
    b = math.exp(res.x)
    return b, g(b)


# ---------------------------------------------------------------------------
# convex u
# ---------------------------------------------------------------------------


def solve_convex_u(u: PayoffCurve, w, s: float, opts: SolverOptions = SolverOptions()):
    """``sup_{x in (0,1]} w(x) u(s/x)``; attained only by stopping at once."""
    h = lambda x: np.asarray(w(x) * u(s / np.asarray(x, dtype=float)), dtype=float)
    xs = np.geomspace(1e-16, 1.0, 3201)
    hv = np.where(np.isnan(h(xs)), -np.inf, h(xs))
    i = int(np.argmax(hv))
    u_s = float(u(s))
    tol = opts.tie_tol * max(1.0, abs(u_s))
    diag = {"x_grid": [1e-16, 1.0, xs.size]}
    if hv[i] <= u_s + tol:
        # tie with stopping at once (e.g. linear u): prefer StopNow
        return _stop_now("convex_u", u, s, **diag)
    if i == 0:
        ks = np.arange(10, 17)
        seq = h(10.0 ** (-ks.astype(float)))
        d = np.diff(seq)
        if np.all(np.isinf(seq[-1:])) or (d[-1] > 0 and d[-1] >= 0.5 * d[-2]):
            diag["divergence"] = "w(x) u(s/x) grows without bound as x -> 0"
            return finish("convex_u", math.inf, INFINITE, s, HoldForever(), u, params={"x_star": 0.0, "b": math.inf}, diagnostics=diag)
        r = d[-1] / d[-2] if d[-2] > 0 else 0.0
        v = float(seq[-1] + (d[-1] * r / (1.0 - r) if 0 < r < 1 else 0.0))
        diag["b_to_infinity"] = True
        return finish("convex_u", v, SUPREMUM, s, HoldForever(), u, params={"x_star": 0.0, "b": math.inf}, diagnostics=diag)
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
    res = optimize.minimize_scalar(
        lambda t: -float(h(math.exp(t))), bounds=(math.log(lo), math.log(hi)), method="bounded", options={"xatol": 1e-12}
    )
    x_star = math.exp(res.x)
    v = float(h(x_star))
    if v < hv[i]:
        x_star, v = float(xs[i]), float(hv[i])
    if v <= u_s + tol:
        return _stop_now("convex_u", u, s, **diag)
    b_star = s / x_star
    diag.update({"not_finite": True, "prob_never_stop": 1.0 - x_star})
    return finish(
        "convex_u",
        v,
        SUPREMUM,
        s,
        ExitInterval(0.0, b_star, attained=False),
        u,
        params={"x_star": x_star, "b": b_star},
        diagnostics=diag,
    )
