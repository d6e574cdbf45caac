"""Quantile/CDF calculus for laws of the stopped state.

A law on (0, inf) is stored piecewise.  On the quantile side a ``Step`` is a
flat value on ``(p0, p1]`` and a ``Branch`` is a continuous increasing piece;
on the CDF side an ``Atom`` is a jump and a ``Rise`` is a continuous increasing
piece.  Flat parts of one side are jumps of the other and need no storage.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy import integrate, optimize

DIVERGENCE_CAP = 1e12


class QuadratureError(RuntimeError):
    def __init__(self, message, partial=math.nan, abserr=math.nan):
        super().__init__(message)
        self.partial = partial
        self.abserr = abserr


def integrate_1d(f, a, b, points=None, epsabs=1e-11, epsrel=1e-11, cap=DIVERGENCE_CAP, limit=500):
    """Adaptive quadrature of a scalar integrand; returns +inf when the integral blows past ``cap``."""
    if a >= b:
        return 0.0
    if points is not None:
        points = [p for p in points if a < p < b]
        if not points or math.isinf(a) or math.isinf(b):
            points = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, points=points, epsabs=epsabs, epsrel=epsrel, limit=limit)
    if not math.isfinite(val) or val > cap:
        return math.inf
    if err > max(1e-6, 1e-6 * abs(val)):
        # slow convergence near an endpoint singularity usually means divergence
        if abs(val) > 1e6:
            return math.inf
        raise QuadratureError(f"quadrature did not converge on [{a}, {b}]", val, err)
    return val


# ---------------------------------------------------------------------------
# monotone branch functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffinePower:
    """``t -> A * (m t + c)**e + d``; closed under inversion and integration."""

    A: float
    m: float
    c: float
    e: float
    d: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            base = np.maximum(self.m * t + self.c, 0.0)
            return self.A * base**self.e + self.d

    def inverse(self) -> "AffinePower":
        return _affine_inverse(self)

    def antiderivative(self, t):
        """An antiderivative of ``self`` in ``t``; +/-inf where it diverges."""
        z = max(self.m * t + self.c, 0.0)
        if self.e == -1.0:
            core = -math.inf if z == 0 else math.log(z)
            head = self.A * core / self.m
        elif z == 0.0 and self.e + 1.0 < 0:
            head = math.copysign(math.inf, self.A / (self.m * (self.e + 1.0)))
        elif math.isinf(z):
            head = math.copysign(math.inf, self.A / self.m) if self.e + 1.0 > 0 else 0.0
        else:
            head = self.A * z ** (self.e + 1.0) / (self.m * (self.e + 1.0))
        return head + (self.d * t if self.d else 0.0)

    def integral(self, t0, t1):
        if t0 >= t1:
            return 0.0
        hi, lo = self.antiderivative(t1), self.antiderivative(t0)
        if math.isinf(hi) or math.isinf(lo):
            return math.inf
        return hi - lo

    def moment(self, t0, t1):
        """``int_{t0}^{t1} t * f'(t) dt`` (first moment of the measure df)."""
        if t0 >= t1:
            return 0.0
        if math.isinf(t1):
            # t f(t) - int f needs care; use the derivative form directly
            k = self.A * self.e * self.m
            g = AffinePower(k, self.m, self.c, self.e - 1.0, 0.0)
            # t * g(t) = (1/m)[(m t + c) - c] g(t)
            head = AffinePower(k / self.m, self.m, self.c, self.e, 0.0).integral(t0, t1)
            tail = (self.c / self.m) * g.integral(t0, t1)
            return head - tail
        f0 = float(self(t0))
        f1 = float(self(t1))
        return t1 * f1 - t0 * f0 - self.integral(t0, t1)


def _affine_inverse(f: AffinePower) -> AffinePower:
    # y = A (m t + c)^e + d  ->  m t + c = ((y - d)/A)^(1/e) = |A|^(-1/e) * (sgn(A) (y - d))^(1/e)
    sA = 1.0 if f.A > 0 else -1.0
    A2 = abs(f.A) ** (-1.0 / f.e) / f.m
    return AffinePower(A=A2, m=sA, c=-sA * f.d, e=1.0 / f.e, d=-f.c / f.m)


class GenericFn:
    """Monotone increasing function given by a callable; inverse by vectorized bisection."""

    def __init__(self, fn: Callable, lo: float, hi: float, inverse: Callable = None):
        self.fn = fn
        self.lo, self.hi = lo, hi
        self._inv = inverse

    def __call__(self, t):
        return np.asarray(self.fn(np.asarray(t, dtype=float)), dtype=float)

    def inverse(self):
        if self._inv is not None:
            return GenericFn(self._inv, float(self(self.lo)), float(self(self.hi)), inverse=self.fn)
        lo, hi, fn = self.lo, self.hi, self.fn
        y_lo, y_hi = float(self(lo)), float(self(hi))

        def inv(y):
            y = np.asarray(y, dtype=float)
            a = np.full(y.shape, lo, dtype=float)
            b = np.full(y.shape, hi, dtype=float)
            for _ in range(100):
                mid = 0.5 * (a + b)
                below = np.asarray(fn(mid)) < y
                a = np.where(below, mid, a)
                b = np.where(below, b, mid)
            return 0.5 * (a + b)

        return GenericFn(inv, y_lo, y_hi, inverse=fn)

    def integral(self, t0, t1):
        return integrate_1d(lambda t: float(self.fn(np.asarray(t))), t0, t1)

    def moment(self, t0, t1):
        # int t df(t) = [t f] - int f
        if math.isinf(t1):
            raise QuadratureError("moment over an unbounded generic branch is not supported")
        return t1 * float(self(t1)) - t0 * float(self(t0)) - self.integral(t0, t1)


BranchFn = Union[AffinePower, GenericFn]

_GL_T, _GL_W = np.polynomial.legendre.leggauss(16)


def _segment_integrals(fn, lo, hi):
    """Integrals of ``fn`` over each ``[lo[i], hi[i]]``; closed form or 16-point Gauss-Legendre."""
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    if isinstance(fn, AffinePower):
        return np.array([fn.integral(a, b) for a, b in zip(lo, hi)])
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = mid[:, None] + half[:, None] * _GL_T[None, :]
    vals = fn(t.ravel()).reshape(t.shape)
    out = (vals * _GL_W[None, :]).sum(axis=1) * half
    if hi.size and hi[-1] >= 1.0 - 1e-15:
        # the top cell may carry an integrable singularity at 1
        out[-1] = fn.integral(lo[-1], hi[-1])
    return out


# ---------------------------------------------------------------------------
# pieces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Step:
    p0: float
    p1: float
    value: float


@dataclass(frozen=True)
class Branch:
    p0: float
    p1: float
    fn: BranchFn


@dataclass(frozen=True)
class Atom:
    y: float
    p0: float
    p1: float


@dataclass(frozen=True)
class Rise:
    y0: float
    y1: float
    fn: BranchFn


def _fval(fn, t):
    if math.isinf(t):
        return math.inf if float(fn(1e300)) > 1e290 else float(fn(1e300))
    return float(fn(t))


class QuantileFn:
    """Left-continuous nondecreasing ``G: [0,1) -> R+`` with ``G(0) = 0``."""

    def __init__(self, pieces: Sequence[Union[Step, Branch]]):
        pieces = [pc for pc in pieces if pc.p1 > pc.p0]
        if not pieces:
            raise ValueError("empty quantile function")
        if abs(pieces[0].p0) > 1e-15 or abs(pieces[-1].p1 - 1.0) > 1e-12:
            raise ValueError("quantile pieces must cover (0, 1)")
        for a, b in zip(pieces, pieces[1:]):
            if abs(a.p1 - b.p0) > 1e-12:
                raise ValueError("quantile pieces must be contiguous")
        self.pieces = tuple(pieces)

    @classmethod
    def steps(cls, breaks, values):
        """``G = values[i]`` on ``(breaks[i], breaks[i+1]]``; ``breaks`` runs from 0 to 1."""
        return cls([Step(float(p0), float(p1), float(v)) for p0, p1, v in zip(breaks[:-1], breaks[1:], values)])

    @classmethod
    def constant(cls, c):
        return cls([Step(0.0, 1.0, float(c))])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for pc in self.pieces:
            sel = (x > pc.p0) & (x <= pc.p1)
            if isinstance(pc, Step):
                out = np.where(sel, pc.value, out)
            else:
                out = np.where(sel, pc.fn(np.where(sel, x, 0.5 * (pc.p0 + pc.p1))), out)
        return out

    def budget(self) -> float:
        """``int_0^1 G(x) dx``; may be +inf."""
        total = 0.0
        for pc in self.pieces:
            if isinstance(pc, Step):
                total += pc.value * (pc.p1 - pc.p0)
            else:
                total += pc.fn.integral(pc.p0, pc.p1)
        return total

    def cumulative(self, ps):
        """``int_0^p G(x) dx`` for each ``p`` in the sorted array ``ps``."""
        ps = np.asarray(ps, dtype=float)
        out = np.zeros_like(ps)
        done = 0.0
        for pc in self.pieces:
            inside = (ps > pc.p0) & (ps <= pc.p1)
            if isinstance(pc, Step):
                out[inside] = done + pc.value * (ps[inside] - pc.p0)
                full = pc.value * (pc.p1 - pc.p0)
            else:
                idx = np.nonzero(inside)[0]
                if idx.size:
                    lo = np.concatenate(([pc.p0], ps[idx][:-1]))
                    parts = _segment_integrals(pc.fn, lo, ps[idx])
                    out[idx] = done + np.cumsum(parts)
                full = pc.fn.integral(pc.p0, pc.p1)
            done += full
            out[ps > pc.p1] = done
        return out

    def feasible(self, s, rtol=1e-9) -> bool:
        return self.budget() <= s * (1.0 + rtol)

    @property
    def lower(self) -> float:
        pc = self.pieces[0]
        return pc.value if isinstance(pc, Step) else _fval(pc.fn, pc.p0)

    @property
    def upper(self) -> float:
        pc = self.pieces[-1]
        return pc.value if isinstance(pc, Step) else _fval(pc.fn, pc.p1)

    @property
    def is_step(self) -> bool:
        return all(isinstance(pc, Step) for pc in self.pieces)

    def to_cdf(self) -> "Cdf":
        return cdf_of(self)

    def __repr__(self):
        return f"QuantileFn({list(self.pieces)})"


class Cdf:
    """Right-continuous CDF on (0, inf): ordered atoms and continuous rises."""

    def __init__(self, pieces: Sequence[Union[Atom, Rise]]):
        pieces = [pc for pc in pieces if not (isinstance(pc, Atom) and pc.p1 <= pc.p0)]
        if not pieces:
            raise ValueError("empty CDF")
        self.pieces = tuple(pieces)
        last = self.pieces[-1]
        top = last.p1 if isinstance(last, Atom) else _fval(last.fn, last.y1)
        if abs(top - 1.0) > 1e-9:
            raise ValueError(f"CDF must reach 1, got {top}")

    @classmethod
    def steps(cls, points, levels):
        """Step CDF ``sum c_i 1[a_i, a_{i+1}) + 1[a_n, inf)`` from jump points and levels c_1..c_{n-1}."""
        levels = list(levels) + [1.0]
        if len(points) != len(levels):
            raise ValueError("need one more jump point than levels")
        pieces, prev = [], 0.0
        for a, c in zip(points, levels):
            if c < prev - 1e-15:
                raise ValueError("levels must be nondecreasing")
            pieces.append(Atom(float(a), prev, float(c)))
            prev = float(c)
        return cls(pieces)

    @classmethod
    def point_mass(cls, c):
        return cls([Atom(float(c), 0.0, 1.0)])

    @classmethod
    def pareto(cls, lower, index):
        """``F(y) = 1 - (lower / y)**index`` for ``y >= lower``."""
        fn = AffinePower(A=-(lower**index), m=1.0, c=0.0, e=-float(index), d=1.0)
        return cls([Rise(float(lower), math.inf, fn)])

    def _val(self, y, left):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for pc in self.pieces:
            if isinstance(pc, Atom):
                hit = (y > pc.y) if left else (y >= pc.y)
                out = np.where(hit, pc.p1, out)
            else:
                inside = (y > pc.y0) & (y < pc.y1) if left else (y >= pc.y0) & (y < pc.y1)
                beyond = y >= pc.y1
                val = pc.fn(np.where(inside, y, pc.y0))
                out = np.where(inside, val, out)
                out = np.where(beyond, _fval(pc.fn, pc.y1), out)
        return np.clip(out, 0.0, 1.0)

    def __call__(self, y):
        return self._val(y, left=False)

    def left(self, y):
        """``F(y-)``."""
        return self._val(y, left=True)

    @property
    def support(self):
        first, last = self.pieces[0], self.pieces[-1]
        m = first.y if isinstance(first, Atom) else first.y0
        M = last.y if isinstance(last, Atom) else last.y1
        return m, M

    def atoms(self):
        return [(pc.y, pc.p1 - pc.p0) for pc in self.pieces if isinstance(pc, Atom)]

    def mean(self) -> float:
        """``int_0^inf (1 - F(y)) dy`` computed on the CDF side."""
        total, y_prev, p_prev = 0.0, 0.0, 0.0
        for pc in self.pieces:
            if isinstance(pc, Atom):
                total += (1.0 - p_prev) * (pc.y - y_prev)
                y_prev, p_prev = pc.y, pc.p1
            else:
                total += (1.0 - p_prev) * (pc.y0 - y_prev)
                if math.isinf(pc.y1):
                    tail = _one_minus_integral(pc.fn, pc.y0, pc.y1)
                    return math.inf if math.isinf(tail) else total + tail
                total += _one_minus_integral(pc.fn, pc.y0, pc.y1)
                y_prev, p_prev = pc.y1, _fval(pc.fn, pc.y1)
        return total

    def tail_moment(self, x) -> float:
        """``int_{[x, inf)} y dF(y)``."""
        total = 0.0
        for pc in self.pieces:
            if isinstance(pc, Atom):
                if pc.y >= x:
                    total += pc.y * (pc.p1 - pc.p0)
            elif pc.y1 > x:
                total += pc.fn.moment(max(x, pc.y0), pc.y1)
        return total

    def to_quantile(self) -> QuantileFn:
        return left_inverse(self)

    def __repr__(self):
        return f"Cdf({list(self.pieces)})"


def _one_minus_integral(fn, y0, y1):
    """``int_{y0}^{y1} (1 - fn(y)) dy``."""
    if isinstance(fn, AffinePower):
        neg = AffinePower(-fn.A, fn.m, fn.c, fn.e, 1.0 - fn.d)
        return neg.integral(y0, y1)
    return integrate_1d(lambda y: 1.0 - float(fn(np.asarray(y))), y0, y1)


# ---------------------------------------------------------------------------
# conversions
# ---------------------------------------------------------------------------


def left_inverse(F: Cdf) -> QuantileFn:
    """``G(x) = inf{y >= 0: F(y) >= x}`` as a quantile function."""
    out = []
    for pc in F.pieces:
        if isinstance(pc, Atom):
            if out and isinstance(out[-1], Step) and out[-1].value == pc.y:
                out[-1] = Step(out[-1].p0, pc.p1, pc.y)
            else:
                out.append(Step(pc.p0, pc.p1, pc.y))
        else:
            p0, p1 = _fval(pc.fn, pc.y0), _fval(pc.fn, pc.y1)
            out.append(Branch(p0, p1, pc.fn.inverse()))
    return QuantileFn(out)


def cdf_of(G: QuantileFn) -> Cdf:
    """Right-continuous CDF whose left-continuous inverse is ``G``."""
    out = []
    for pc in G.pieces:
        if isinstance(pc, Step):
            if out and isinstance(out[-1], Atom) and out[-1].y == pc.value:
                out[-1] = Atom(pc.value, out[-1].p0, pc.p1)
            else:
                out.append(Atom(pc.value, pc.p0, pc.p1))
        else:
            y0, y1 = _fval(pc.fn, pc.p0), _fval(pc.fn, pc.p1)
            out.append(Rise(y0, y1, pc.fn.inverse()))
    return Cdf(out)


# ---------------------------------------------------------------------------
# Choquet values
# ---------------------------------------------------------------------------


def _kinks(u):
    th = getattr(u, "theta", None)
    return [th] if th else None


def choquet_value_dist(F: Cdf, u, w) -> float:
    """``J_D(F) = int_0^inf w(1 - F(y)) u'(y) dy`` (u normalized, u(0) = 0)."""
    total, y_prev, p_prev = 0.0, 0.0, 0.0
    u_prev = 0.0
    for pc in F.pieces:
        y_start = pc.y if isinstance(pc, Atom) else pc.y0
        u_start = float(u(y_start))
        total += float(w(1.0 - p_prev)) * (u_start - u_prev)
        if isinstance(pc, Atom):
            y_prev, p_prev, u_prev = pc.y, pc.p1, u_start
            continue

        def integrand(y, fn=pc.fn):
            return float(w(1.0 - float(fn(np.asarray(y))))) * float(u.deriv(np.asarray(y)))

        part = integrate_1d(integrand, pc.y0, pc.y1, points=_kinks(u))
        if math.isinf(part):
            return math.inf
        total += part
        if math.isinf(pc.y1):
            return total
        y_prev, p_prev = pc.y1, _fval(pc.fn, pc.y1)
        u_prev = float(u(pc.y1))
    return total


def choquet_value_quantile(G: QuantileFn, u, w) -> float:
    """``J_Q(G) = int_0^1 u(G(x)) w'(1 - x) dx``."""
    total = 0.0
    for pc in G.pieces:
        if isinstance(pc, Step):
            total += float(u(pc.value)) * (float(w(1.0 - pc.p0)) - float(w(1.0 - pc.p1)))
            continue

        def integrand(x, fn=pc.fn):
            return float(u(float(fn(np.asarray(x))))) * float(w.deriv(np.asarray(1.0 - x)))

        pts = [1.0 - w.q] if getattr(w, "q", None) else None
        part = integrate_1d(integrand, pc.p0, pc.p1, points=pts)
        if math.isinf(part):
            return math.inf
        total += part
    return total


def budget(G: QuantileFn) -> float:
    return G.budget()


def feasible(G: QuantileFn, s: float) -> bool:
    return G.feasible(s)


# ---------------------------------------------------------------------------
# derivative envelopes
# ---------------------------------------------------------------------------


def _first_below(deriv, y, start, strict):
    """Vectorized ``inf{z >= start: deriv(z) <= y}`` (``< y`` when strict) for nonincreasing deriv."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.size == 1 and not strict:
        return np.array([_first_below_scalar(deriv, float(y[0]), start)])

    def ok(z, yy):
        d = deriv(z)
        return d < yy if strict else d <= yy

    out = np.empty_like(y)
    z0 = max(start, 1e-300)
    at_start = ok(np.full_like(y, z0), y)
    out[at_start] = start
    todo = ~at_start
    if not todo.any():
        return out
    yy = y[todo]
    lo = np.full(yy.shape, z0 if start > 0 else 1e-300)
    hi = np.full(yy.shape, max(1.0, 2.0 * start))
    for _ in range(80):
        grow = ~ok(hi, yy) & (hi < 1e300)
        if not grow.any():
            break
        lo = np.where(grow, hi, lo)
        hi = np.where(grow, hi * 1e4, hi)
    never = ~ok(hi, yy)
    hi = np.where(never, lo, hi)
    for _ in range(200):
        mid = np.exp(0.5 * (np.log(lo) + np.log(hi)))
        good = ok(mid, yy)
        hi = np.where(good, mid, hi)
        lo = np.where(good, lo, mid)
        if np.all(hi / lo - 1.0 < 1e-15):
            break
    res = hi.copy()
    res[never] = np.inf
    out[todo] = res
    return out


def _first_below_scalar(deriv, y, start):
    """Scalar ``inf{z >= start: deriv(z) <= y}`` by bracketing and Brent's method on ``log z``."""
    d = lambda z: float(deriv(z))
    z0 = max(start, 1e-300)
    if d(z0) <= y:
        return start
    if math.isnan(y):
        return math.nan
    lo = z0 if start > 0 else 1e-300
    hi = max(1.0, 2.0 * start)
    while d(hi) > y:
        lo, hi = hi, hi * 1e4
        if hi > 1e300:
            return math.inf
    if lo < hi * 1e-8:
        # move the lower end up toward the root before Brent
        probe = hi
        while probe > lo and d(probe) <= y:
            probe *= 1e-2
        lo = max(lo, probe)
    f = lambda t: d(math.exp(t)) - y
    t = optimize.brentq(f, math.log(lo), math.log(hi), xtol=1e-15, rtol=1e-15, maxiter=300)
    z = math.exp(t)
    # land on the side where the inequality holds
    return z if d(z) <= y else z * (1 + 4e-16)


def envelope_lower(u, y):
    """``(u')_l^{-1}(y) = inf{z >= 0: u'(z) <= y}``."""
    closed = u.envelope_closed(y, upper=False)
    if closed is not None:
        return closed if np.ndim(y) else float(closed)
    out = _first_below(u.deriv, y, 0.0, strict=False)
    return out if np.ndim(y) else float(out[0])


def envelope_upper(u, y):
    """``(u')_u^{-1}(y) = inf{z >= 0: u'(z) < y}``."""
    closed = u.envelope_closed(y, upper=True)
    if closed is not None:
        return closed if np.ndim(y) else float(closed)
    out = _first_below(u.deriv, y, 0.0, strict=True)
    return out if np.ndim(y) else float(out[0])


def envelope_tangent(u):
    """Tangent point ``z_t`` and chord slope ``u(z_t)/z_t`` of the concave envelope of an S-shaped ``u``.

    ``z_t`` is the first ``z >= theta`` with ``u'(z) <= u(z)/z``; the envelope is
    the chord from the origin on ``[0, z_t]`` and ``u`` beyond.
    """
    cached = getattr(u, "_tangent_cache", None)
    if cached is not None:
        return cached
    th = float(u.theta)
    gap = lambda z: float(u.deriv(z)) - float(u(z)) / z
    if gap(th) <= 0:
        z_t = th
    else:
        lo, hi = th, 2.0 * th
        while gap(hi) > 0:
            lo, hi = hi, 2.0 * hi
            if hi > 1e300:
                raise ValueError("S-shaped payoff has no concave envelope tangent")
        z_t = optimize.brentq(gap, lo, hi, xtol=1e-14 * hi, rtol=1e-15)
    res = (z_t, float(u(z_t)) / z_t)
    try:
        u._tangent_cache = res
    except AttributeError:
        pass
    return res


def concave_envelope_inverse(u, y):
    """Left inverse of the derivative of the concave envelope of ``u``.

    Equals ``envelope_lower`` for concave ``u``.  For S-shaped ``u`` it is 0 for
    ``y`` at or above the chord slope and ``inf{z >= z_t: u'(z) <= y}`` below it.
    """
    if u.shape != "s_shaped":
        return envelope_lower(u, y)
    z_t, slope = envelope_tangent(u)
    y = np.asarray(y, dtype=float)
    z = _first_below(u.deriv, np.atleast_1d(y), z_t, strict=False)
    z = np.where(np.atleast_1d(y) >= slope, 0.0, z)
    return z if y.ndim else float(z[0])


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------


def export_quantile_csv(G: QuantileFn, path, n=1000):
    x = (np.arange(n) + 0.5) / n
    g = G(x)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "G"])
        for a, b in zip(x, g):
            wr.writerow([f"{a:.10g}", f"{b:.12g}"])


def export_cdf_csv(F: Cdf, path, n=1000, upper_quantile=1 - 1e-4):
    m, M = F.support
    if math.isinf(M):
        M = float(left_inverse(F)(upper_quantile))
    lo = max(m * 0.999, 0.0)
    hi = M * 1.001 if M > 0 else 1.0
    y = np.linspace(lo, hi, n)
    f = F(y)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "F"])
        for a, b in zip(y, f):
            wr.writerow([f"{a:.12g}", f"{b:.12g}"])
