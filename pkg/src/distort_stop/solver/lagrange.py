"""Lagrangian regimes with concave u: concave, reverse-S and S-shaped distortions."""
from __future__ import annotations

import math

import numpy as np
from scipy import optimize

from ..embedding import DrawdownFraction, StopNow, azema_yor_rule
from ..quantile import (
    AffinePower,
    Branch,
    Cdf,
    GenericFn,
    QuantileFn,
    Step,
    cdf_of,
    choquet_value_quantile,
    concave_envelope_inverse,
    integrate_1d,
    left_inverse,
)
from ._numerics import graded_nodes, log_bisect, log_bracket_root, maximize_1d
from .base import ATTAINED, INFINITE, SUPREMUM, SolverFailure, SolverOptions, finish
from .threshold import _stop_now


def _env(u):
    return lambda y: concave_envelope_inverse(u, y)


def _ratio(lam, wp):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(wp > 0, lam / np.where(wp > 0, wp, 1.0), np.inf)


def _branch_fn(u, w, lam):
    env = _env(u)

    def g(x):
        x = np.asarray(x, dtype=float)
        return np.asarray(env(_ratio(lam, w.deriv(1.0 - x))), dtype=float)

    return g


def _embed(F, G, s):
    try:
        return azema_yor_rule(F, s, G=G, rtol=1e-7)
    except Exception as exc:  # embedding is a post-processing step; keep the solution
        raise SolverFailure(f"could not build the Azema-Yor rule: {exc}") from exc


# ---------------------------------------------------------------------------
# concave u, concave w
# ---------------------------------------------------------------------------


def solve_concave_concave(u, w, s: float, opts: SolverOptions = SolverOptions()):
    """Quantile ``G*(x) = (u')^{-1}_l(lam / w'(1-x))`` with ``lam`` fixed by the budget."""
    if w.shape == "linear":
        return _stop_now("concave_concave", u, s, reason="linear distortion sells at once")
    pf = u.power_form()
    if pf is not None and w.kind == "power" and pf[1] < 1.0:
        C, g = pf
        return solve_power_power(g, w.params["alpha"], s, C=C, u=u)

    gfun = _branch_fn(u, w, 1.0)

    def phi(lam):
        g = _branch_fn(u, w, lam)
        return integrate_1d(lambda x: float(g(x)), 0.0, 1.0, epsabs=1e-13, epsrel=1e-12)

    lam0 = float(u.deriv(s)) * max(float(w.deriv(0.5)), 1e-12)
    if not math.isfinite(phi(1e300)) and not math.isfinite(phi(lam0)):
        return finish(
            "concave_concave",
            math.inf,
            INFINITE,
            s,
            StopNow(attained=False),
            u,
            diagnostics={"reason": "the budget integral diverges for every multiplier"},
        )
    phi0 = phi(1e-300)
    if phi0 <= s:
        lam = 0.0
        iters = 0
    else:
        br = log_bracket_root(phi, s, lam0 if lam0 > 0 else 1.0)
        if br is None:
            raise SolverFailure("could not bracket the multiplier")
        lam, iters = log_bisect(phi, s, br[0], br[1], iters=opts.lambda_iters, rtol=opts.lambda_rtol, scale=s)
    gfun = _branch_fn(u, w, lam)
    lo_b, hi_b = float(gfun(0.0)), float(gfun(1.0))
    if hi_b - lo_b <= 1e-12 * max(1.0, hi_b):
        return _stop_now("concave_concave", u, s, multiplier=lam)
    G = QuantileFn([Branch(0.0, 1.0, GenericFn(gfun, 0.0, 1.0))])
    F = cdf_of(G)
    value = choquet_value_quantile(G, u, w)
    rule = _embed(F, G, s)
    return finish(
        "concave_concave",
        value,
        ATTAINED,
        s,
        rule,
        u,
        g_star=G,
        f_star=F,
        params={"lambda": lam, "lower_bound": lo_b, "upper_bound": hi_b},
        diagnostics={"bisection_iterations": iters, "budget_residual": G.budget() - s},
    )


def solve_power_power(gamma: float, alpha: float, s: float, C: float = None, u=None):
    """Closed forms for ``u(x) = C x**gamma`` and ``w(p) = p**alpha``."""
    if not (0 < gamma < 1 and 0 < alpha <= 1):
        raise ValueError("power-power closed form needs 0 < gamma < 1 and 0 < alpha <= 1")
    C = 1.0 / gamma if C is None else float(C)
    if alpha > gamma:
        k = (alpha - gamma) / (1.0 - gamma)
        lam = C * gamma * alpha * (s * k) ** (gamma - 1.0)
        value = C * alpha * s**gamma * k ** (gamma - 1.0)
        if alpha == 1.0:
            return finish(
                "power_power", value, ATTAINED, s, StopNow(), u,
                g_star=QuantileFn.constant(s), f_star=Cdf.point_mass(s),
                params={"lambda": lam, "eta": 1.0, "pareto_index": math.inf, "lower_support": s},
            )
        index = (1.0 - gamma) / (1.0 - alpha)
        F = Cdf.pareto(s * k, index)
        G = left_inverse(F)
        return finish(
            "power_power",
            value,
            ATTAINED,
            s,
            DrawdownFraction(k),
            u,
            g_star=G,
            f_star=F,
            params={"lambda": lam, "eta": k, "pareto_index": index, "lower_support": s * k},
        )
    if alpha < gamma:
        eta = 0.5 * (1.0 - alpha / gamma)
        G = QuantileFn([Branch(0.0, 1.0, AffinePower(eta * s, -1.0, 1.0, eta - 1.0))])
        return finish(
            "power_power",
            math.inf,
            INFINITE,
            s,
            DrawdownFraction(eta, attained=False),
            u,
            g_star=G,
            f_star=cdf_of(G),
            params={"eta": eta},
            diagnostics={"witness": "G(x) = eta s (1-x)^(eta-1) has budget s and infinite value"},
        )
    n = 10
    return finish(
        "power_power",
        math.inf,
        INFINITE,
        s,
        DrawdownFraction(1.0 / n, attained=False),
        u,
        params={"eta": 1.0 / n},
        diagnostics={
            "sequence": "G_n(x) = (s/n)(1-x)^(1/n-1), J(G_n) = C s^gamma n^(1-gamma)",
            "J_n": [C * s**gamma * m ** (1.0 - gamma) for m in (1, 10, 100, 1000)],
        },
    )


def power_sequence_value(gamma, s, n, C=None):
    """``J(G_n)`` of the maximizing sequence when ``alpha = gamma``."""
    C = 1.0 / gamma if C is None else C
    return C * s**gamma * n ** (1.0 - gamma)


# ---------------------------------------------------------------------------
# quadratic reverse-S distortion with a power payoff
# ---------------------------------------------------------------------------


def power_rsq_a(cbar, gamma, s):
    r = 2.0 * cbar - 1.0
    return s / (cbar + (1.0 - gamma) / (2.0 * (2.0 - gamma)) * (r ** (1.0 / (gamma - 1.0)) - r))


def power_rsq_g(cbar, gamma):
    """Reduced objective ``g(cbar)`` at ``s = 1``."""
    r = 2.0 * cbar - 1.0
    a = power_rsq_a(cbar, gamma, 1.0)
    return a**gamma * (
        1.0 - 2.0 * cbar + 2.0 * cbar**2 + (1.0 - gamma) / (2.0 - gamma) * (r ** (gamma / (gamma - 1.0)) - r**2)
    )


def power_rsq_psi(x, a, cbar, gamma, s):
    """Barycenter of the optimal law in closed form (middle branch with the exponent of ``2c - 1`` as -1)."""
    x = np.asarray(x, dtype=float)
    rho = 1.0 / (2.0 * cbar - 1.0)
    M = (2.0 * cbar - 1.0) ** (1.0 / (gamma - 1.0)) * a
    with np.errstate(divide="ignore", invalid="ignore"):
        t = x / a
        mid = (1.0 - gamma) / (2.0 - gamma) * a * (t ** (2.0 - gamma) - rho ** ((2.0 - gamma) / (1.0 - gamma))) / (
            t ** (1.0 - gamma) - rho
        )
    out = np.where(x <= a, s, mid)
    return np.where(x >= M, x, out)


def solve_power_rsq(gamma: float, s: float, C: float = None, u=None):
    """One-dimensional reduction over the atom mass ``cbar`` at the cut-loss level ``a``."""
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    C = 1.0 / gamma if C is None else float(C)
    grid = np.linspace(0.5, 1.0, 2001)[1:]
    vals = np.array([power_rsq_g(c, gamma) for c in grid])
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = optimize.minimize_scalar(lambda c: -power_rsq_g(c, gamma), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    cbar = float(res.x) if -res.fun >= vals[i] else float(grid[i])
    g_best = power_rsq_g(cbar, gamma)
    g_half = ((1.0 - gamma) / (2.0 - gamma)) ** (1.0 - gamma) * 2.0**gamma
    value = C * s**gamma * g_best
    if cbar >= 1.0 - 1e-12:
        return _stop_now("power_rsq", u, s) if u is not None else finish(
            "power_rsq", C * s**gamma, ATTAINED, s, StopNow(), g_star=QuantileFn.constant(s), f_star=Cdf.point_mass(s)
        )
    a = power_rsq_a(cbar, gamma, s)
    lam = C * gamma * (4.0 * cbar - 2.0) * a ** (gamma - 1.0)
    M = (2.0 * cbar - 1.0) ** (1.0 / (gamma - 1.0)) * a
    d = cbar - 0.5
    branch = AffinePower(A=a, m=1.0 / d, c=-0.5 / d, e=1.0 / (1.0 - gamma))
    G = QuantileFn([Step(0.0, cbar, a), Branch(cbar, 1.0, branch)])
    F = cdf_of(G)
    rule = _embed(F, G, s)
    return finish(
        "power_rsq",
        value,
        ATTAINED,
        s,
        rule,
        u,
        g_star=G,
        f_star=F,
        params={"cbar": cbar, "a": a, "lambda": lam, "upper_support": M, "g": g_best, "g_half": g_half},
        diagnostics={"g_at_one": 1.0, "budget_residual": G.budget() - s},
    )


# ---------------------------------------------------------------------------
# one-level programs: reverse-S (floor a on the left) and S-shaped (cap a on the right)
# ---------------------------------------------------------------------------


class _LevelProgram:
    """Budget and value of ``G = a`` on one side and the envelope branch on the other.

    ``side = "floor"``: ``G = a`` on ``(0, x_a]`` and ``a v env`` beyond, with the
    branch living on ``(q, 1)``.  ``side = "cap"``: ``G = a ^ env`` on ``(0, x_a)``
    and ``a`` on ``[x_a, 1)``, the branch living on ``(0, q)``.
    """

    def __init__(self, u, w, s, side):
        self.u, self.w, self.s, self.side = u, w, s, side
        self.q = w.q
        self.env = _env(u)

    def crossing(self, a, lam):
        """Where the envelope branch crosses level ``a``."""
        q, w = self.q, self.w
        ua = float(self.u.deriv(a)) if a > 0 else math.inf
        thresh = lam / ua if ua > 0 else math.inf  # branch exceeds a where w'(1-x) > thresh
        if self.side == "floor":
            lo, hi = q, 1.0
        else:
            lo, hi = 0.0, q
        wp = lambda x: float(w.deriv(1.0 - x))
        if wp(lo) > thresh:
            return lo
        if wp(hi - 1e-15) <= thresh:
            return hi
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if wp(mid) > thresh:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-15:
                break
        return hi

    def _branch(self, lam):
        return _branch_fn(self.u, self.w, lam)

    def _nodes(self, lo, hi):
        key = (lo, hi)
        if key != getattr(self, "_nkey", None):
            self._nkey = key
            self._nx, self._nw = graded_nodes(lo, hi, levels=40)
            self._nwp = np.asarray(self.w.deriv(1.0 - self._nx), dtype=float)
        return self._nx, self._nw, self._nwp

    def _branch_sum(self, lo, hi, lam, with_value):
        if hi <= lo:
            return 0.0
        x, wt, wp = self._nodes(lo, hi)
        g = np.asarray(self.env(_ratio(lam, wp)), dtype=float)
        if not with_value:
            return float(g @ wt)
        ug = np.where(g > 0, np.asarray(self.u(np.maximum(g, 1e-300)), dtype=float), float(self.u(0.0)))
        return float(ug @ (wt * wp))

    def budget(self, a, lam):
        xa = self.crossing(a, lam)
        if self.side == "floor":
            return a * xa + self._branch_sum(xa, 1.0, lam, False)
        return self._branch_sum(0.0, xa, lam, False) + a * (1.0 - xa)

    def value(self, a, lam):
        u, w = self.u, self.w
        xa = self.crossing(a, lam)
        ua = float(u(a)) if a > 0 else 0.0
        if self.side == "floor":
            return (1.0 - float(w(1.0 - xa))) * ua + self._branch_sum(xa, 1.0, lam, True)
        return self._branch_sum(0.0, xa, lam, True) + float(w(1.0 - xa)) * ua

    def solve_lambda(self, a, rtol=1e-11):
        """Multiplier meeting the budget with equality at level ``a``; None if infeasible."""
        s = self.s
        f = lambda lam: self.budget(a, lam)
        lam0 = float(self.u.deriv(max(a, s))) * max(float(self.w.deriv(1.0 - self.q)), 1e-12)
        if not (lam0 > 0 and math.isfinite(lam0)):
            lam0 = 1.0
        try:
            low = f(1e-300)
        except Exception:
            low = math.inf
        if low <= s:
            return 0.0
        br = log_bracket_root(f, s, lam0)
        if br is None:
            return None
        lam, _ = log_bisect(f, s, br[0], br[1], rtol=rtol, scale=s)
        return lam

    def objective(self, a):
        lam = self.solve_lambda(a)
        if lam is None:
            return -math.inf
        return self.value(a, lam)

    def quantile(self, a, lam):
        xa = self.crossing(a, lam)
        g = GenericFn(self._branch(lam), 0.0, 1.0)
        if self.side == "floor":
            pieces = [Step(0.0, xa, a)] if xa > 0 and a > 0 else []
            if xa < 1.0:
                pieces.append(Branch(xa, 1.0, g))
        else:
            pieces = [Branch(0.0, xa, g)] if xa > 0 else []
            if xa < 1.0:
                pieces.append(Step(xa, 1.0, a))
        return QuantileFn(pieces), xa


def solve_concave_reverse_s(u, w, s: float, opts: SolverOptions = SolverOptions()):
    """Floor ``a`` on ``(0, q]`` and the envelope branch beyond; outer search over ``a`` in ``[0, s]``."""
    if w.shape != "reverse_s":
        raise ValueError("solve_concave_reverse_s needs a reverse-S distortion")
    prog = _LevelProgram(u, w, s, "floor")
    u_s = float(u(s))

    def obj(a):
        if a >= s:
            return u_s
        return prog.objective(a)

    a_star, v = maximize_1d(obj, 0.0, s, n_grid=opts.outer_points)
    tol = opts.tie_tol * max(1.0, abs(u_s))
    if a_star >= s * (1 - 1e-9) or v <= u_s + tol:
        return _stop_now("concave_reverse_s", u, s)
    lam = prog.solve_lambda(a_star)
    if a_star <= s * 1e-6:
        return finish(
            "concave_reverse_s",
            v,
            SUPREMUM,
            s,
            StopNow(attained=False),
            u,
            params={"a": 0.0, "lambda": lam},
            diagnostics={"no_cut_loss_floor": True, "note": "optimum approached as a -> 0; cross-check with the oracle"},
        )
    G, xa = prog.quantile(a_star, lam)
    F = cdf_of(G)
    value = choquet_value_quantile(G, u, w)
    rule = _embed(F, G, s)
    return finish(
        "concave_reverse_s",
        value,
        ATTAINED,
        s,
        rule,
        u,
        g_star=G,
        f_star=F,
        params={"a": a_star, "lambda": lam, "atom_mass": xa},
        diagnostics={"program_value": v, "budget_residual": G.budget() - s},
    )


def solve_concave_s(u, w, s: float, opts: SolverOptions = SolverOptions()):
    """Envelope branch capped at ``a`` on ``(0, q)``, flat ``a`` beyond; outer search over ``a``."""
    if w.shape != "s_shaped":
        raise ValueError("solve_concave_s needs an S-shaped distortion")
    prog = _LevelProgram(u, w, s, "cap")
    q = w.q
    u_s = float(u(s))
    a_hi = s / (1.0 - q)

    def obj(a):
        if a <= s:
            return u_s
        if a >= a_hi:
            return -math.inf
        return prog.objective(a)

    a_star, v = maximize_1d(obj, s, a_hi * (1 - 1e-9), n_grid=opts.outer_points)
    tol = opts.tie_tol * max(1.0, abs(u_s))
    if a_star <= s * (1 + 1e-9) or v <= u_s + tol:
        return _stop_now("concave_s", u, s)
    lam = prog.solve_lambda(a_star)
    G, xa = prog.quantile(a_star, lam)
    F = cdf_of(G)
    value = choquet_value_quantile(G, u, w)
    rule = _embed(F, G, s)
    return finish(
        "concave_s",
        value,
        ATTAINED,
        s,
        rule,
        u,
        g_star=G,
        f_star=F,
        params={"a": a_star, "lambda": lam, "cap_from": xa},
        diagnostics={"program_value": v, "budget_residual": G.budget() - s},
    )
