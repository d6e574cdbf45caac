"""Market parameters, payoff/distortion catalog and the GBM -> martingale transform.

A GBM ``dP = mu P dt + sigma P dB`` is mapped to the driftless martingale
``S = P**beta`` with ``beta = (sigma**2 - 2 mu) / sigma**2``; the payoff is carried
along as ``u(x) = U(x**(1/beta))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

SHAPES = ("nonincreasing", "linear", "convex", "concave", "s_shaped", "piecewise_convex", "generic")
W_SHAPES = ("linear", "convex", "concave", "reverse_s", "s_shaped")

PAYOFF_KINDS = ("call", "power", "log", "exponential", "s_power", "piecewise_linear")
DISTORTION_KINDS = (
    "identity",
    "power",
    "reverse_s_quadratic",
    "s_quadratic",
    "reverse_s_generic",
    "s_generic",
)


class ModelError(ValueError):
    """Invalid model parameters."""


class ShapeError(ModelError):
    """A declared curve shape failed numerical verification."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


@dataclass(frozen=True)
class MarketParams:
    mu: float
    sigma: float
    p0: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ModelError(f"sigma must be > 0, got {self.sigma}")
        if not self.p0 > 0:
            raise ModelError(f"p0 must be > 0, got {self.p0}")

    @property
    def degenerate(self) -> bool:
        s2 = self.sigma * self.sigma
        return abs(2.0 * self.mu - s2) <= 1e-12 * max(s2, abs(2.0 * self.mu))

    @property
    def beta(self) -> float:
        return compute_beta(self)

    @property
    def s(self) -> float:
        """Initial state of the martingale ``S = P**beta``."""
        if self.degenerate:
            raise ModelError("s is undefined in the degenerate case mu = sigma^2/2")
        return self.p0 ** self.beta

    @property
    def goodness(self) -> float:
        return self.mu / self.sigma**2


def compute_beta(market: MarketParams) -> float:
    if market.degenerate:
        return 0.0
    s2 = market.sigma * market.sigma
    return (-2.0 * market.mu + s2) / s2


# ---------------------------------------------------------------------------
# payoffs U on the price scale
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PayoffFn:
    """Nondecreasing continuous payoff ``U: R+ -> R+`` from the catalog."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PAYOFF_KINDS:
            raise ModelError(f"unknown payoff kind {self.kind!r}; expected one of {PAYOFF_KINDS}")
        p = self.params
        if self.kind == "call" and not p.get("K", 0) > 0:
            raise ModelError("call payoff needs K > 0")
        if self.kind == "power" and not 0 < p.get("gamma", -1) < 1:
            raise ModelError("power payoff needs 0 < gamma < 1")
        if self.kind == "exponential" and not p.get("alpha", 0) > 0:
            raise ModelError("exponential payoff needs alpha > 0")
        if self.kind == "s_power":
            a1, a2, k = p.get("alpha1", 0), p.get("alpha2", 0), p.get("k", 0)
            if not (a1 >= 1 >= a2 > 0 and k > 0):
                raise ModelError("s_power payoff needs alpha1 >= 1 >= alpha2 > 0 and k > 0")
        if self.kind == "piecewise_linear":
            x = np.asarray(p.get("knots", ()), dtype=float)
            v = np.asarray(p.get("values", ()), dtype=float)
            if x.size < 2 or x.size != v.size:
                raise ModelError("piecewise_linear needs matching knots/values with >= 2 entries")
            if np.any(np.diff(x) <= 0) or x[0] < 0:
                raise ModelError("piecewise_linear knots must be nonnegative and strictly increasing")
            if np.any(np.diff(v) < 0) or v[0] < 0:
                raise ModelError("piecewise_linear values must be nonnegative and nondecreasing")
            if p.get("tail_slope", 0.0) < 0:
                raise ModelError("piecewise_linear tail_slope must be >= 0")

    # constructors ---------------------------------------------------------
    @classmethod
    def call(cls, K):
        return cls("call", {"K": float(K)})

    @classmethod
    def power(cls, gamma):
        return cls("power", {"gamma": float(gamma)})

    @classmethod
    def log(cls):
        return cls("log", {})

    @classmethod
    def exponential(cls, alpha):
        return cls("exponential", {"alpha": float(alpha)})

    @classmethod
    def s_power(cls, alpha1, alpha2, k):
        return cls("s_power", {"alpha1": float(alpha1), "alpha2": float(alpha2), "k": float(k)})

    @classmethod
    def piecewise_linear(cls, knots, values, tail_slope=0.0):
        return cls(
            "piecewise_linear",
            {"knots": tuple(map(float, knots)), "values": tuple(map(float, values)), "tail_slope": float(tail_slope)},
        )

    # evaluation -----------------------------------------------------------
    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        p = self.params
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            if self.kind == "call":
                out = np.maximum(y - p["K"], 0.0)
            elif self.kind == "power":
                out = y ** p["gamma"] / p["gamma"]
            elif self.kind == "log":
                out = np.log1p(y)
            elif self.kind == "exponential":
                out = -np.expm1(-p["alpha"] * y)
            elif self.kind == "s_power":
                r = y / p["k"]
                out = np.where(r <= 1.0, r ** p["alpha1"], r ** p["alpha2"])
            else:
                x, v = np.asarray(p["knots"]), np.asarray(p["values"])
                out = np.interp(y, x, v) + p.get("tail_slope", 0.0) * np.maximum(y - x[-1], 0.0)
                out = np.where(np.isinf(y), self.sup_value(), out)
        return out

    def d_right(self, y):
        return self._deriv(y, right=True)

    def d_left(self, y):
        return self._deriv(y, right=False)

    def _deriv(self, y, right):
        y = np.asarray(y, dtype=float)
        p = self.params
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            if self.kind == "call":
                out = np.where(y >= p["K"], 1.0, 0.0) if right else np.where(y > p["K"], 1.0, 0.0)
            elif self.kind == "power":
                out = y ** (p["gamma"] - 1.0)
            elif self.kind == "log":
                out = 1.0 / (1.0 + y)
            elif self.kind == "exponential":
                out = p["alpha"] * np.exp(-p["alpha"] * y)
            elif self.kind == "s_power":
                k, a1, a2 = p["k"], p["alpha1"], p["alpha2"]
                r = y / k
                lower = r < 1.0 if right else r <= 1.0
                out = np.where(lower, a1 / k * r ** (a1 - 1.0), a2 / k * r ** (a2 - 1.0))
            else:
                x, v = np.asarray(p["knots"]), np.asarray(p["values"])
                slopes = np.append(np.diff(v) / np.diff(x), p.get("tail_slope", 0.0))
                slopes = np.insert(slopes, 0, 0.0)
                side = "right" if right else "left"
                out = slopes[np.searchsorted(x, y, side=side)]
        return out

    def sup_value(self) -> float:
        if self.kind == "exponential":
            return 1.0
        if self.kind == "piecewise_linear":
            if self.params.get("tail_slope", 0.0) > 0:
                return math.inf
            return float(max(self.params["values"]))
        return math.inf

    def argsup(self) -> Optional[float]:
        """Smallest ``y`` with ``U(y) = sup U``, or None when the sup is not attained."""
        if self.kind == "piecewise_linear" and self.params.get("tail_slope", 0.0) == 0:
            v = np.asarray(self.params["values"])
            return float(self.params["knots"][int(np.argmax(v >= v.max()))])
        return None

    def at_zero(self) -> float:
        return float(self(0.0))


# ---------------------------------------------------------------------------
# transformed payoffs u on the martingale scale
# ---------------------------------------------------------------------------


class PayoffCurve:
    """Common interface of transformed payoffs ``u`` (normalized so that u(0) = 0).

    Subclasses provide ``raw``, ``deriv``, ``offset``, ``shape`` and ``theta``;
    ``power_form`` returns ``(C, g)`` when ``u(x) = C x**g`` exactly.
    """

    shape: str = "generic"
    theta: Optional[float] = None
    offset: float = 0.0

    def raw(self, x):
        raise NotImplementedError

    def deriv(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.raw(x) - self.offset

    def u0plus(self) -> float:
        """``lim_{x -> 0+} u(x)`` on the raw scale."""
        return float(self.raw(1e-300))

    def power_form(self):
        return None

    def envelope_closed(self, y, upper=False):
        """Closed-form derivative inverse, or None to fall back to bisection."""
        return None


class TransformedPayoff(PayoffCurve):
    """``u(x) = U(x**(1/beta))`` for a catalog payoff."""

    def __init__(self, source: PayoffFn, beta: float, declared_shape=None, verify=True, s_ref=1.0):
        if beta == 0:
            raise ModelError("beta must be nonzero; use the degenerate solver for mu = sigma^2/2")
        self.source = source
        self.beta = float(beta)
        shape, theta = expected_shape(source.kind, self.beta, source.params)
        if declared_shape is not None and declared_shape != shape:
            if declared_shape not in SHAPES:
                raise ModelError(f"unknown shape {declared_shape!r}")
            shape = declared_shape
            theta = None if shape != "s_shaped" else _locate_inflection(self, s_ref)
        self.shape = shape
        self.theta = theta
        self.offset = float(source.at_zero()) if self.beta > 0 else 0.0
        if verify:
            verify_payoff_shape(self, s_ref)

    def __repr__(self):
        return f"TransformedPayoff({self.source.kind}, {dict(self.source.params)}, beta={self.beta})"

    def raw(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            y = x ** (1.0 / self.beta)
        return self.source(y)

    def deriv(self, x):
        """Right upper derivative ``limsup_{h -> 0+} (u(x+h) - u(x)) / h``."""
        x = np.asarray(x, dtype=float)
        b = self.beta
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            y = x ** (1.0 / b)
            dy = (1.0 / b) * x ** (1.0 / b - 1.0)
            dU = self.source.d_right(y) if b > 0 else self.source.d_left(y)
            out = dU * dy
        return np.where(dU == 0, 0.0, out)

    def u0plus(self) -> float:
        if self.beta > 0:
            return float(self.source.at_zero())
        return self.source.sup_value()

    def power_form(self):
        if self.source.kind == "power" and self.beta > 0:
            g = self.source.params["gamma"]
            return 1.0 / g, g / self.beta
        return None

    def envelope_closed(self, y, upper=False):
        pf = self.power_form()
        if pf is None:
            return None
        C, g = pf
        y = np.asarray(y, dtype=float)
        if g == 1.0:
            hit = y > C if upper else y >= C
            return np.where(hit, 0.0, np.inf)
        if g > 1.0:
            return None
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(y <= 0, np.inf, (y / (C * g)) ** (1.0 / (g - 1.0)))


class CurvePayoff(PayoffCurve):
    """Transformed payoff given directly on the martingale scale by callables.

    Used for non-catalog curves in tests and programmatic use.
    """

    def __init__(self, fn: Callable, dfn: Callable, shape: str, theta=None, offset=None, u0plus=None):
        if shape not in SHAPES:
            raise ModelError(f"unknown shape {shape!r}")
        self._fn = fn
        self._dfn = dfn
        self.shape = shape
        self.theta = theta
        self._u0 = u0plus
        if offset is None:
            offset = 0.0 if shape == "nonincreasing" else float(fn(np.asarray(0.0)))
        self.offset = float(offset)

    def raw(self, x):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return np.asarray(self._fn(np.asarray(x, dtype=float)), dtype=float)

    def deriv(self, x):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return np.asarray(self._dfn(np.asarray(x, dtype=float)), dtype=float)

    def u0plus(self):
        if self._u0 is not None:
            return float(self._u0)
        return float(self.raw(1e-300))


def transform_payoff(U: PayoffFn, beta: float, declared_shape=None, s_ref=1.0) -> TransformedPayoff:
    return TransformedPayoff(U, beta, declared_shape=declared_shape, s_ref=s_ref)


def expected_shape(kind: str, beta: float, params=None):
    """Catalog shape of ``u(x) = U(x**(1/beta))`` and its inflection abscissa when S-shaped."""
    params = params or {}
    if kind not in PAYOFF_KINDS:
        raise ModelError(f"unknown payoff kind {kind!r}")
    if beta == 0:
        raise ModelError("shape is undefined for beta = 0")
    if beta < 0:
        return "nonincreasing", None
    if kind == "call":
        if beta <= 1:
            return "convex", None
        return "s_shaped", params["K"] ** beta
    if kind == "power":
        g = params["gamma"]
        if beta == g:
            return "linear", None
        return ("convex", None) if beta < g else ("concave", None)
    if kind in ("log", "exponential"):
        if beta >= 1:
            return "concave", None
        r = 1.0 / beta
        if kind == "log":
            return "s_shaped", (r - 1.0) ** beta
        return "s_shaped", ((r - 1.0) / (params["alpha"] * r)) ** beta
    if kind == "s_power":
        a1, a2, k = params["alpha1"], params["alpha2"], params["k"]
        if beta < a2:
            return "piecewise_convex", None
        if beta <= a1:
            return "s_shaped", k**beta
        return "concave", None
    return "generic", None


# ---------------------------------------------------------------------------
# shape verification
# ---------------------------------------------------------------------------


def _slopes(u, x):
    y = u.raw(x)
    return np.diff(y) / np.diff(x)


def _slope_noise(u, x):
    """Rounding error of each divided difference (flat tails cancel to noise)."""
    y = np.abs(u.raw(x))
    return 4.0 * np.finfo(float).eps * np.maximum(y[1:], y[:-1]) / np.diff(x)


def _monotone_violations(d, increasing, tol, noise=0.0):
    scale = np.maximum(np.abs(d[1:]), np.abs(d[:-1]))
    noise = np.broadcast_to(noise, d.shape)
    slack = tol * scale + noise[1:] + noise[:-1]
    step = np.diff(d)
    bad = step < -slack if increasing else step > slack
    return np.nonzero(bad)[0]


def _locate_inflection(u, s_ref):
    x = np.geomspace(s_ref * 1e-4, s_ref * 1e4, 512)
    d = _slopes(u, x)
    return float(x[int(np.argmax(d)) + 1])


def verify_payoff_shape(u: PayoffCurve, s_ref=1.0, tol=1e-9, n=512):
    """Check the declared shape of ``u`` on a log-spaced grid around ``s_ref``.

    Raises ShapeError listing the violating grid points.
    """
    x = np.geomspace(s_ref * 1e-4, s_ref * 1e4, n)
    d = _slopes(u, x)
    nz = _slope_noise(u, x)
    if u.shape == "nonincreasing":
        bad = np.nonzero(d > tol * np.abs(d).max())[0]
    elif u.shape == "linear":
        bad = np.union1d(_monotone_violations(d, True, tol, nz), _monotone_violations(d, False, tol, nz))
    elif u.shape == "convex":
        bad = _monotone_violations(d, True, tol, nz)
    elif u.shape == "concave":
        bad = _monotone_violations(d, False, tol, nz)
    elif u.shape == "s_shaped":
        th = u.theta
        left = x[1:-1] < th
        v_inc = _monotone_violations(d, True, tol, nz)
        v_dec = _monotone_violations(d, False, tol, nz)
        # the interval straddling theta may contain the kink; skip it
        straddle = (x[1:-1] < th) & (x[2:] > th) | (x[:-2] < th) & (x[1:-1] > th)
        bad = np.array(
            [i for i in v_inc if left[i] and not straddle[i]] + [i for i in v_dec if not left[i] and not straddle[i]],
            dtype=int,
        )
    else:
        bad = np.array([], dtype=int)
    if u.shape != "nonincreasing":
        bad = np.union1d(bad, np.nonzero(d < -tol * np.abs(d).max())[0])
    if len(bad):
        pts = [float(x[i + 1]) for i in bad[:20]]
        raise ShapeError(f"payoff does not look {u.shape} on the verification grid near {pts[:5]}", pts)
    return True


# ---------------------------------------------------------------------------
# distortions w on [0, 1]
# ---------------------------------------------------------------------------


class DistortionFn:
    """Strictly increasing, absolutely continuous ``w: [0,1] -> [0,1]`` with w(0)=0, w(1)=1."""

    def __init__(self, kind: str, params=None, *, fn=None, dfn=None, shape=None, verify=True):
        params = dict(params or {})
        self.kind = kind
        self.params = params
        self._fn, self._dfn = fn, dfn
        self._interp = None
        if kind == "custom":
            if fn is None or dfn is None or shape is None:
                raise ModelError("custom distortion needs fn, dfn and shape")
            self.shape = shape
            self.q = params.get("q")
        elif kind == "identity":
            self.shape, self.q = "linear", None
        elif kind == "power":
            a = params.get("alpha", 0)
            if not a > 0:
                raise ModelError("power distortion needs alpha > 0")
            self.shape = "linear" if a == 1 else ("concave" if a < 1 else "convex")
            self.q = None
        elif kind in ("reverse_s_quadratic", "s_quadratic"):
            q = params.setdefault("q", 0.5)
            if not 0 < q < 1:
                raise ModelError("inflection parameter q must lie in (0, 1)")
            self.shape = "reverse_s" if kind == "reverse_s_quadratic" else "s_shaped"
            self.q = q
        elif kind in ("reverse_s_generic", "s_generic"):
            from scipy.interpolate import PchipInterpolator

            q = params.get("q")
            if q is None or not 0 < q < 1:
                raise ModelError("generic distortions need q in (0, 1)")
            p = np.asarray(params.get("table_p", ()), dtype=float)
            v = np.asarray(params.get("table_w", ()), dtype=float)
            if p.size < 3 or p.size != v.size or p[0] != 0 or p[-1] != 1 or v[0] != 0 or v[-1] != 1:
                raise ModelError("generic distortion tables must run from (0,0) to (1,1)")
            if np.any(np.diff(p) <= 0) or np.any(np.diff(v) <= 0):
                raise ModelError("generic distortion tables must be strictly increasing")
            self._interp = PchipInterpolator(p, v)
            self._dinterp = self._interp.derivative()
            self.shape = "reverse_s" if kind == "reverse_s_generic" else "s_shaped"
            self.q = q
        else:
            raise ModelError(f"unknown distortion kind {kind!r}; expected one of {DISTORTION_KINDS}")
        if verify:
            verify_distortion(self)

    def __repr__(self):
        return f"DistortionFn({self.kind}, {self.params})"

    # constructors ---------------------------------------------------------
    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def power(cls, alpha):
        return cls("power", {"alpha": float(alpha)})

    @classmethod
    def reverse_s_quadratic(cls, q=0.5):
        return cls("reverse_s_quadratic", {"q": float(q)})

    @classmethod
    def s_quadratic(cls, q=0.5):
        return cls("s_quadratic", {"q": float(q)})

    @classmethod
    def custom(cls, fn, dfn, shape, q=None):
        return cls("custom", {"q": q}, fn=fn, dfn=dfn, shape=shape)

    # evaluation -----------------------------------------------------------
    def __call__(self, p):
        p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
        k = self.kind
        if k == "identity":
            return p
        if k == "power":
            return p ** self.params["alpha"]
        if k == "reverse_s_quadratic":
            p0, q = 1.0 - self.q, self.q
            return np.where(p <= p0, 2 * p - p * p / p0, 2 * p - 1 + (1 - p) ** 2 / q)
        if k == "s_quadratic":
            p0, q = 1.0 - self.q, self.q
            return np.where(p <= p0, p * p / p0, 1 - (1 - p) ** 2 / q)
        if k == "custom":
            return np.asarray(self._fn(p), dtype=float)
        return np.asarray(self._interp(p), dtype=float)

    def deriv(self, p):
        p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
        k = self.kind
        if k == "identity":
            return np.ones_like(p)
        if k == "power":
            a = self.params["alpha"]
            with np.errstate(divide="ignore"):
                return a * p ** (a - 1.0)
        if k == "reverse_s_quadratic":
            p0, q = 1.0 - self.q, self.q
            return np.where(p <= p0, 2 - 2 * p / p0, 2 - 2 * (1 - p) / q)
        if k == "s_quadratic":
            p0, q = 1.0 - self.q, self.q
            return np.where(p <= p0, 2 * p / p0, 2 * (1 - p) / q)
        if k == "custom":
            return np.asarray(self._dfn(p), dtype=float)
        return np.asarray(self._dinterp(p), dtype=float)

    @property
    def is_convex(self):
        return self.shape in ("linear", "convex")

    @property
    def is_concave(self):
        return self.shape in ("linear", "concave")


def verify_distortion(w: DistortionFn, n=2001, tol=1e-9):
    p = np.linspace(0.0, 1.0, n)
    v = w(p)
    if abs(float(w(0.0))) > 1e-15 or abs(float(w(1.0)) - 1.0) > 1e-12:
        raise ShapeError(f"{w.kind} distortion must satisfy w(0)=0 and w(1)=1")
    bad = np.nonzero(np.diff(v) <= 0)[0]
    if len(bad):
        raise ShapeError("distortion is not strictly increasing", [float(p[i]) for i in bad[:20]])
    d = np.diff(v) / np.diff(p)
    mid = p[1:-1]
    knee = None if w.q is None else 1.0 - w.q
    if w.shape == "linear":
        want_inc = want_dec = np.ones(mid.size, bool)
    elif w.shape == "convex":
        want_inc, want_dec = np.ones(mid.size, bool), np.zeros(mid.size, bool)
    elif w.shape == "concave":
        want_inc, want_dec = np.zeros(mid.size, bool), np.ones(mid.size, bool)
    elif w.shape == "reverse_s":
        want_inc, want_dec = mid > knee + 1.0 / n, mid < knee - 1.0 / n
    else:
        want_inc, want_dec = mid < knee - 1.0 / n, mid > knee + 1.0 / n
    step = np.diff(d)
    scale = np.maximum(np.abs(d[1:]), np.abs(d[:-1])) + 1e-300
    viol = np.nonzero((want_inc & (step < -tol * scale - 1e-9)) | (want_dec & (step > tol * scale + 1e-9)))[0]
    if len(viol):
        raise ShapeError(f"distortion is not {w.shape} on the verification grid", [float(mid[i]) for i in viol[:20]])
    return True
