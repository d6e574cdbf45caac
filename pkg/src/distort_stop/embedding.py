"""Stopping rules that realize target laws of the stopped martingale.

Two-point laws are embedded by interval exits; general laws with mean ``s`` by
the Azema-Yor rule built on the barycenter function of the target.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .quantile import AffinePower, Atom, Branch, Cdf, QuantileFn, Rise, Step, cdf_of, left_inverse

BARYCENTER_KNOTS = 2048


class EmbeddingError(ValueError):
    """The target law cannot be embedded (wrong mean, bad interval)."""


# ---------------------------------------------------------------------------
# rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StopNow:
    attained: bool = True

    def to_dict(self):
        return {"kind": "stop_now", "attained": self.attained}


@dataclass(frozen=True)
class HoldForever:
    attained: bool = False

    def to_dict(self):
        return {"kind": "hold_forever", "attained": self.attained}


@dataclass(frozen=True)
class ExitInterval:
    """Stop on leaving ``(a, b)``.  ``a = 0`` or ``b = inf`` gives a one-sided rule."""

    a: float
    b: float
    attained: bool = True

    def __post_init__(self):
        if not (0.0 <= self.a <= self.b):
            raise EmbeddingError(f"exit interval needs 0 <= a <= b, got ({self.a}, {self.b})")

    def to_dict(self):
        return {"kind": "exit_interval", "a": float(self.a), "b": float(self.b), "attained": self.attained}


@dataclass(frozen=True)
class HitLevel:
    """Stop the first time the monitored process reaches ``level``.

    ``on_price`` marks rules stated for the price itself (used when the
    martingale transform degenerates).
    """

    level: float
    attained: bool = True
    on_price: bool = False

    def to_dict(self):
        return {"kind": "hit_level", "level": float(self.level), "attained": self.attained, "on_price": self.on_price}


@dataclass(frozen=True)
class DrawdownFraction:
    """Stop the first time ``S_t <= eta * max_{u <= t} S_u``."""

    eta: float
    attained: bool = True

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise EmbeddingError(f"drawdown fraction must lie in (0, 1], got {self.eta}")

    def to_dict(self):
        return {"kind": "drawdown_fraction", "eta": float(self.eta), "attained": self.attained}


@dataclass(frozen=True, eq=False)
class BarycenterRule:
    """Azema-Yor rule: stop the first time ``S_t <= level(max_{u <= t} S_u)``."""

    psi: "Barycenter"
    attained: bool = True

    def to_dict(self):
        return {"kind": "barycenter", "attained": self.attained, "s": self.psi.s, "support": list(self.psi.support)}


StoppingRule = Union[StopNow, HoldForever, ExitInterval, HitLevel, DrawdownFraction, BarycenterRule]


def rule_from_dict(d: dict, s: Optional[float] = None) -> StoppingRule:
    kind = d.get("kind")
    att = bool(d.get("attained", True))
    if kind == "stop_now":
        return StopNow()
    if kind == "hold_forever":
        return HoldForever()
    if kind == "exit_interval":
        return ExitInterval(float(d["a"]), float(d["b"]), att)
    if kind == "hit_level":
        return HitLevel(float(d["level"]), att, bool(d.get("on_price", False)))
    if kind == "drawdown_fraction":
        eta = float(d["eta"])
        return StopNow() if eta == 1.0 else DrawdownFraction(eta, att)
    raise EmbeddingError(f"cannot build a rule of kind {kind!r} from a dictionary")


# ---------------------------------------------------------------------------
# two-point laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExitLaw:
    rule: StoppingRule
    masses: tuple  # (P(S_tau = a), P(S_tau = b))
    cdf: Cdf


def exit_rule(a, b, s) -> ExitLaw:
    """Interval-exit rule and its stopped law ``P(a) = (b - s)/(b - a)``.

    Exact when the inputs are ``Fraction`` or integers.
    """
    if not (0 < a <= s <= b):
        raise EmbeddingError(f"exit_rule needs 0 < a <= s <= b, got a={a}, s={s}, b={b}")
    if a == b:
        return ExitLaw(StopNow(), (1, 0), Cdf.point_mass(float(s)))
    exact = all(isinstance(v, (int, Fraction)) for v in (a, b, s))
    if exact:
        a, b, s = Fraction(a), Fraction(b), Fraction(s)
    pa = (b - s) / (b - a)
    pb = (s - a) / (b - a)
    pieces = [Atom(float(a), 0.0, float(pa))]
    if pb > 0:
        pieces.append(Atom(float(b), float(pa), 1.0))
    else:
        pieces = [Atom(float(a), 0.0, 1.0)]
    return ExitLaw(ExitInterval(float(a), float(b)), (pa, pb), Cdf(pieces))


# ---------------------------------------------------------------------------
# barycenter function
# ---------------------------------------------------------------------------


class Barycenter:
    """Barycenter ``Psi`` of a law with mean ``s``, with a monotone knot table for ``level``.

    ``Psi(x) = s`` for ``x <= m``, ``E[X | X >= x]`` on ``(m, M)`` and ``x``
    for ``x >= M``.
    """

    def __init__(self, F: Cdf, G: QuantileFn, s: float, knots=BARYCENTER_KNOTS, closed_form=None):
        self.F, self.G, self.s = F, G, float(s)
        self.m, self.M = float(G.lower), float(G.upper)
        self.total = G.budget()
        self.closed_form = closed_form
        self._build_table(knots)

    @property
    def support(self):
        return (self.m, self.M)

    def _tail_mean(self, p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        tail = self.total - self.G.cumulative(p)
        with np.errstate(divide="ignore", invalid="ignore"):
            return tail / (1.0 - p)

    def _build_table(self, knots):
        xs, ps_ = [self.m], [self.s]
        n_branch = sum(isinstance(pc, Branch) for pc in self.G.pieces)
        per_branch = max(16, knots // max(n_branch, 1))
        for pc in self.G.pieces:
            if isinstance(pc, Step):
                xs.append(pc.value)
                ps_.append(float(self._tail_mean(pc.p0)[0]) if pc.p0 > 0 else self.s)
                if pc.p1 < 1.0:
                    xs.append(pc.value)
                    ps_.append(float(self._tail_mean(pc.p1)[0]))
            else:
                top = pc.p1
                if top >= 1.0:
                    # cluster knots toward 1 where unbounded branches live
                    span = top - pc.p0
                    grid = pc.p0 + span * (1.0 - np.geomspace(1.0, 1e-9, per_branch))
                else:
                    grid = np.linspace(pc.p0, top, per_branch)
                grid = np.unique(np.clip(grid, pc.p0, top))
                if grid[-1] >= 1.0:
                    grid = grid[:-1]
                vals = self._tail_mean(grid)
                if grid[0] == 0.0:
                    vals[0] = self.s
                xs.extend(np.asarray(pc.fn(grid), dtype=float).tolist())
                ps_.extend(vals.tolist())
        self.tail_finite = math.isfinite(self.M)
        if self.tail_finite:
            xs.append(self.M)
            ps_.append(self.M)
        x = np.maximum.accumulate(np.asarray(xs, dtype=float))
        psi = np.asarray(ps_, dtype=float)
        # isotonic guard against quadrature noise; Psi(x) >= x on the middle branch
        psi = np.maximum.accumulate(np.maximum(psi, np.minimum(x, psi.max())))
        self.x_knots, self.psi_knots = x, psi

    def __call__(self, x):
        """Exact ``Psi(x)`` from the law (no table interpolation)."""
        x = np.asarray(x, dtype=float)
        if self.closed_form is not None:
            out = self.closed_form(x)
        else:
            p = self.F.left(x)
            out = self._tail_mean(np.clip(p, 0.0, 1.0 - 1e-300).ravel()).reshape(x.shape)
        out = np.where(x <= self.m, self.s, out)
        return np.where(x >= self.M, x, out)

    def level(self, m):
        """``l(m) = sup{x: Psi(x) <= m}`` from the knot table."""
        return lookup_level(np.asarray(m, dtype=float), self.psi_knots, self.x_knots, self.tail_finite)

    def export_csv(self, path, n=1000):
        lo = self.m * 0.9
        hi = self.M * 1.1 if math.isfinite(self.M) else float(self.G(1 - 1e-4))
        x = np.linspace(max(lo, 1e-12), hi, n)
        psi = self(x)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x", "psi"])
            for a, b in zip(x, psi):
                wr.writerow([f"{a:.12g}", f"{b:.12g}"])


def lookup_level(m, psi, x, tail_finite):
    """Monotone inverse of a knot table under the sup convention (numpy version of the kernel)."""
    m = np.atleast_1d(np.asarray(m, dtype=float))
    j = np.searchsorted(psi, m, side="right") - 1
    out = np.zeros_like(m)
    last = len(psi) - 1
    for k in range(m.size):
        jk = j[k]
        if jk < 0:
            out[k] = 0.0
        elif jk == last:
            out[k] = m[k] if tail_finite else x[last] * m[k] / psi[last]
        elif x[jk + 1] == x[jk] or psi[jk + 1] == psi[jk]:
            out[k] = x[jk]
        else:
            out[k] = x[jk] + (m[k] - psi[jk]) / (psi[jk + 1] - psi[jk]) * (x[jk + 1] - x[jk])
    return out if out.size > 1 else float(out[0])


def _pareto_index(F: Cdf):
    """Index ``k`` when ``F`` is a pure Pareto law ``1 - (L/y)^k``, else None."""
    if len(F.pieces) != 1 or not isinstance(F.pieces[0], Rise):
        return None
    pc = F.pieces[0]
    fn = pc.fn
    if not isinstance(fn, AffinePower) or not math.isinf(pc.y1):
        return None
    if fn.c == 0 and fn.m == 1 and fn.d == 1 and fn.A < 0 and fn.e < -1:
        return -fn.e
    return None


def barycenter(F: Cdf, s: Optional[float] = None, rtol=1e-9, knots=BARYCENTER_KNOTS, G: QuantileFn = None) -> Barycenter:
    """Barycenter of ``F``; ``G`` (its quantile function) may be passed when already known."""
    if G is None:
        G = left_inverse(F)
    mean = G.budget()
    if s is None:
        s = mean
    if not math.isfinite(mean) or abs(mean - s) > rtol * max(1.0, abs(s)) + 1e-12:
        raise EmbeddingError(f"target mean {mean} differs from s = {s}; the Azema-Yor rule needs a centered law")
    closed = None
    k = _pareto_index(F)
    if k is not None:
        closed = lambda x, k=k: k / (k - 1.0) * np.asarray(x, dtype=float)
    return Barycenter(F, G, s, knots=knots, closed_form=closed)


def azema_yor_rule(F: Cdf, s: Optional[float] = None, G: QuantileFn = None, rtol=1e-9) -> StoppingRule:
    """The Azema-Yor rule embedding ``F``; Pareto targets reduce to a drawdown rule."""
    psi = barycenter(F, s, rtol=rtol, G=G)
    if psi.m == psi.M:
        return StopNow()
    k = _pareto_index(F)
    if k is not None:
        eta = (k - 1.0) / k
        return StopNow() if eta >= 1.0 else DrawdownFraction(eta)
    return BarycenterRule(psi)


def invert_barycenter(psi: Barycenter, m, exact=True):
    """Stop level ``l(m) = sup{x: Psi(x) <= m}``.

    The knot table gives a first guess; with ``exact`` it is polished by
    bisection on the exact ``Psi`` between the neighbouring knots.
    """
    guess = psi.level(m)
    if not exact:
        return guess
    scalar = np.ndim(m) == 0
    m = np.atleast_1d(np.asarray(m, dtype=float))
    lv = np.atleast_1d(np.asarray(guess, dtype=float)).copy()
    inner = (lv > psi.m) & (lv < psi.M) & np.isfinite(lv)
    if inner.any():
        mm = m[inner]
        xk = psi.x_knots
        j = np.clip(np.searchsorted(xk, lv[inner]), 1, xk.size - 1)
        lo, hi = xk[j - 1].copy(), xk[j].copy()
        # widen until Psi(lo) <= m < Psi(hi)
        for _ in range(60):
            bad_lo = psi(lo) > mm
            bad_hi = (psi(hi) <= mm) & (hi < psi.M)
            if not (bad_lo.any() or bad_hi.any()):
                break
            lo = np.where(bad_lo, np.maximum(psi.m, lo - 2.0 * (hi - lo)), lo)
            hi = np.where(bad_hi, np.minimum(psi.M, hi + 2.0 * (hi - lo)), hi)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            ok = psi(mid) <= mm
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        lv[inner] = lo
    return float(lv[0]) if scalar else lv


__all__ = [
    "BarycenterRule",
    "Barycenter",
    "DrawdownFraction",
    "EmbeddingError",
    "ExitInterval",
    "ExitLaw",
    "HitLevel",
    "HoldForever",
    "StopNow",
    "StoppingRule",
    "azema_yor_rule",
    "barycenter",
    "cdf_of",
    "exit_rule",
    "invert_barycenter",
    "lookup_level",
    "rule_from_dict",
]
