"""S-shaped u with a reverse-S distortion: three low levels on ``(0, q]`` and an envelope tail.

The candidate quantile is ``a1`` on ``(0, c1]``, ``a2`` on ``(c1, c2]``, ``a3`` on
``(c2, q]`` and ``a3 v env(lam / w'(1-x))`` on ``(q, 1)``, where ``env`` inverts the
derivative of the concave envelope of ``u``.  The search runs on precomputed
tables: the tail budget and value as functions of ``lam`` are tabulated once per
``a3``, so each lower-part configuration costs one interpolation.
"""
from __future__ import annotations

import math

import numpy as np

from ..quantile import (
    Branch,
    GenericFn,
    QuantileFn,
    Step,
    cdf_of,
    choquet_value_quantile,
    concave_envelope_inverse,
    envelope_tangent,
    integrate_1d,
)
from ._numerics import graded_nodes, log_bisect
from .base import ATTAINED, SUPREMUM, SolverOptions, finish
from .lagrange import _embed, _ratio
from .threshold import _stop_now

N_LAMBDA = 320


def _env_threshold(u, a):
    """``sup{y: env(y) > a}``: the branch exceeds level ``a`` exactly where ``lam / w' <`` this."""
    if u.shape == "s_shaped":
        z_t, slope = envelope_tangent(u)
        if a < z_t:
            return slope
    if a <= 0:
        return math.inf
    return float(u.deriv(a))


class _TailTables:
    """``env(lam_j / w'(1-x_i))`` on Gauss nodes of ``(q, 1)`` for a log grid of multipliers."""

    def __init__(self, u, w, q, s, n_lambda=N_LAMBDA):
        self.u, self.w = u, w
        x, wt = graded_nodes(q, 1.0, levels=24)
        self.x, self.wt = x, wt
        self.wp = np.asarray(w.deriv(1.0 - x), dtype=float)
        top = float(np.max(self.wp)) * _env_threshold(u, 0.0 if u.shape == "s_shaped" else s * 1e-12)
        if not math.isfinite(top):
            top = float(np.max(self.wp)) * float(u.deriv(s * 1e-6))
        self.lams = np.geomspace(top * 1e-8, top * 1.0001, n_lambda)
        y = _ratio(self.lams[:, None], self.wp[None, :])
        self.E = np.asarray(concave_envelope_inverse(u, y.ravel()), dtype=float).reshape(y.shape)
        with np.errstate(invalid="ignore"):
            self.uE = np.where(self.E > 0, np.asarray(u(np.maximum(self.E, 1e-300)), dtype=float), float(u(0.0)))

    def curves(self, a3):
        """Tail budget and value (both decreasing in ``lam``) at floor ``a3``."""
        above = self.E > a3
        ua3 = float(u_at(self.u, a3))
        B = np.where(above, self.E, a3) @ self.wt
        V = np.where(above, self.uE, ua3) @ (self.wt * self.wp)
        # increasing order in budget for interpolation
        return B[::-1].copy(), V[::-1].copy()


def u_at(u, a):
    return float(u(a)) if a > 0 else float(u(0.0)) if u.shape != "nonincreasing" else float(u(1e-300))


def _tail_value(B, V, R):
    """Value of the cheapest multiplier meeting ``tail budget <= R`` (``-inf`` if infeasible)."""
    R = np.asarray(R, dtype=float)
    out = np.interp(R, B, V)
    return np.where(R < B[0] * (1 - 1e-12) - 1e-15, -np.inf, out)


class _Program:
    def __init__(self, u, w, s, theta_eff, tables):
        self.u, self.w, self.s, self.q = u, w, s, w.q
        self.theta = theta_eff
        self.T = tables
        self._cache = {}

    def tail(self, a3):
        key = float(a3)
        if key not in self._cache:
            self._cache[key] = self.T.curves(key)
        return self._cache[key]

    def lower(self, a1, a2, a3, c1, c2):
        """Value and budget of the three low steps (broadcasting)."""
        w, q, u = self.w, self.q, self.u
        w1, w2, wq = w(1.0 - c1), w(1.0 - c2), float(w(1.0 - q))
        ua = lambda a: np.where(a > 0, u(np.maximum(a, 1e-300)), 0.0)
        val = ua(a1) * (1.0 - w1) + ua(a2) * (w1 - w2) + float(u_at(u, a3)) * (w2 - wq)
        bud = a1 * c1 + a2 * (c2 - c1) + a3 * (q - c2)
        return val, bud

    def total(self, a1, a2, a3, c1, c2):
        val, bud = self.lower(a1, a2, a3, c1, c2)
        B, V = self.tail(a3)
        return val + _tail_value(B, V, self.s - bud)

    def grid_search(self, n_c, n_a):
        q, th = self.q, self.theta
        A = th * np.linspace(0.0, 1.0, n_a)
        C = np.linspace(0.0, q, n_c)
        i1, i2 = np.triu_indices(n_c)
        c1, c2 = C[i1], C[i2]
        best = (-np.inf, None)
        for k in range(1, n_a):
            a3 = A[k]
            j1, j2 = np.triu_indices(k + 1)
            a1, a2 = A[j1], A[j2]
            tot = self.total(a1[None, :], a2[None, :], a3, c1[:, None], c2[:, None])
            idx = int(np.argmax(tot))
            if tot.flat[idx] > best[0]:
                r, c = divmod(idx, tot.shape[1])
                best = (float(tot.flat[idx]), (float(a1[c]), float(a2[c]), float(a3), float(c1[r]), float(c2[r])))
        return best, th / (n_a - 1), q / (n_c - 1)

    def zoom(self, point, da, dc, passes=6, n=9):
        val = float(self.total(*point))
        q, th = self.q, self.theta
        history = [val]
        for _ in range(passes):
            a1, a2, a3, c1, c2 = point
            off = np.linspace(-1.0, 1.0, n)
            A1 = np.clip(a1 + da * off, 0.0, th)
            A2 = np.clip(a2 + da * off, 0.0, th)
            A3 = np.unique(np.clip(a3 + da * off, th * 1e-9, th))
            C1 = np.clip(c1 + dc * off, 0.0, q)
            C2 = np.clip(c2 + dc * off, 0.0, q)
            g1, g2, h1, h2 = np.meshgrid(A1, A2, C1, C2, indexing="ij")
            ok = (g1 <= g2) & (h1 <= h2)
            for b3 in A3:
                tot = self.total(g1, g2, b3, h1, h2)
                tot = np.where(ok & (g2 <= b3), tot, -np.inf)
                idx = int(np.argmax(tot))
                if tot.flat[idx] > val:
                    val = float(tot.flat[idx])
                    point = (float(g1.flat[idx]), float(g2.flat[idx]), float(b3), float(h1.flat[idx]), float(h2.flat[idx]))
            history.append(val)
            da *= 0.35
            dc *= 0.35
        return point, val, history

    # exact evaluation -----------------------------------------------------
    def crossing(self, a3, lam):
        thresh = _env_threshold(self.u, a3) if a3 > 0 else _env_threshold(self.u, 0.0)
        wp = lambda x: float(self.w.deriv(1.0 - x))
        lo, hi = self.q, 1.0
        if wp(lo) * thresh > lam:
            return lo
        if wp(hi) * thresh <= lam:
            return hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if wp(mid) * thresh > lam:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-16:
                break
        return hi

    def branch(self, lam):
        u, w = self.u, self.w
        return lambda x: np.asarray(
            concave_envelope_inverse(u, _ratio(lam, np.asarray(w.deriv(1.0 - np.asarray(x, dtype=float))))), dtype=float
        )

    def tail_budget(self, a3, lam):
        xa = self.crossing(a3, lam)
        g = self.branch(lam)
        tail = integrate_1d(lambda x: float(g(x)), xa, 1.0, epsabs=1e-13, epsrel=1e-12) if xa < 1 else 0.0
        return a3 * (xa - self.q) + tail

    def exact(self, point):
        a1, a2, a3, c1, c2 = point
        _, bud = self.lower(a1, a2, a3, c1, c2)
        R = self.s - float(bud)
        f = lambda lam: self.tail_budget(a3, lam)
        lo, hi = self.T.lams[0], self.T.lams[-1] * 10
        if f(lo) <= R:
            lam = lo  # budget slack even at the smallest tabulated multiplier
        elif f(hi) > R * (1 + 1e-12):
            return None
        else:
            lam, _ = log_bisect(f, R, lo, hi, rtol=1e-12, scale=max(R, 1e-300))
        xa = self.crossing(a3, lam)
        pieces = []
        for p0, p1, v in ((0.0, c1, a1), (c1, c2, a2), (c2, xa, a3)):
            if p1 > p0:
                pieces.append(Step(p0, p1, v))
        if xa < 1.0:
            pieces.append(Branch(xa, 1.0, GenericFn(self.branch(lam), xa, 1.0)))
        G = QuantileFn(pieces)
        return G, lam, xa


def solve_sshaped_reverse_s(u, w, s: float, opts: SolverOptions = SolverOptions()):
    """Table search over ``(a1, a2, a3, c1, c2)`` with the multiplier set by the remaining budget."""
    if w.shape != "reverse_s":
        raise ValueError("solve_sshaped_reverse_s needs a reverse-S distortion")
    theta_eff = float(u.theta) if u.shape == "s_shaped" else s
    T = _TailTables(u, w, w.q, s)
    prog = _Program(u, w, s, theta_eff, T)
    (v0, p0), da, dc = prog.grid_search(opts.c_points, opts.a_points)
    u_s = float(u(s))
    tol = opts.tie_tol * max(1.0, abs(u_s))
    if p0 is None or v0 <= u_s + tol:
        return _stop_now("sshaped_reverse_s", u, s, grid_value=v0)
    point, v_grid, history = prog.zoom(p0, da, dc)
    ex = prog.exact(point)
    if ex is None:
        return _stop_now("sshaped_reverse_s", u, s, grid_value=v_grid, note="refined point infeasible")
    G, lam, xa = ex
    value = choquet_value_quantile(G, u, w)
    if value <= u_s + tol:
        return _stop_now("sshaped_reverse_s", u, s, grid_value=v_grid)
    budget = G.budget()
    F = cdf_of(G)
    rule = _embed(F, G, budget)
    a1, a2, a3, c1, c2 = point
    # a zero level with positive mass is only approached: the price never reaches 0
    floor_zero = float(G.lower) <= theta_eff * 1e-8
    status = SUPREMUM if floor_zero else ATTAINED
    if floor_zero:
        rule = type(rule)(rule.psi, attained=False) if hasattr(rule, "psi") else rule
    return finish(
        "sshaped_reverse_s",
        value,
        status,
        s,
        rule,
        u,
        g_star=G,
        f_star=F,
        params={"a1": a1, "a2": a2, "a3": a3, "c1": c1, "c2": c2, "lambda": lam, "tail_from": xa},
        diagnostics={
            "grid_value": v0,
            "refined_value": v_grid,
            "refinement_history": history,
            "budget_slack": s - budget,
            "budget_binds": abs(s - budget) <= 1e-9 * s,
            "no_cut_loss_floor": floor_zero,
        },
    )
