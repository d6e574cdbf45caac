"""Vectorized quadrature and root helpers shared by the Lagrangian solvers."""
from __future__ import annotations

import math

import numpy as np
from scipy import optimize

_T, _W = np.polynomial.legendre.leggauss(16)


def graded_nodes(lo, hi, grade_lo=True, grade_hi=True, levels=48, uniform=8):
    """Gauss-Legendre nodes/weights on ``[lo, hi]`` with cells shrinking geometrically toward graded ends.

    Integrable endpoint singularities of power type lose at most ``2**-levels``
    of their mass; smooth integrands are integrated to near machine precision.
    """
    if hi <= lo:
        return np.zeros(0), np.zeros(0)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    edges = []
    core = np.linspace(0.0, 1.0, uniform + 1)[1:-1]
    ratios = 0.5 ** np.arange(1, levels + 1)
    left = lo + half * ratios[::-1] if grade_lo else np.array([])
    right = hi - half * ratios if grade_hi else np.array([])
    edges = np.concatenate(([lo], left, lo + (hi - lo) * core, right[::-1] if grade_hi else [], [hi]))
    edges = np.unique(np.concatenate((edges, [mid])))
    a, b = edges[:-1], edges[1:]
    h = 0.5 * (b - a)
    c = 0.5 * (b + a)
    x = (c[:, None] + h[:, None] * _T[None, :]).ravel()
    wts = (h[:, None] * _W[None, :]).ravel()
    return x, wts


def log_bracket_root(fn, target, x0, decreasing=True, max_steps=400, factor=4.0):
    """Bracket ``fn(x) = target`` for monotone ``fn`` on ``(0, inf)`` by geometric expansion.

    Returns ``(lo, hi)`` with ``fn(lo) >= target >= fn(hi)`` (decreasing case) or
    None when no bracket exists in ``[1e-300, 1e300]``.
    """
    sign = 1.0 if decreasing else -1.0
    lo = hi = x0
    f0 = sign * (fn(x0) - target)
    if f0 >= 0:
        while True:
            hi *= factor
            if hi > 1e300:
                return None
            if sign * (fn(hi) - target) <= 0:
                return (hi / factor, hi)
    while True:
        lo /= factor
        if lo < 1e-300:
            return None
        if sign * (fn(lo) - target) >= 0:
            return (lo, lo * factor)


def log_bisect(fn, target, lo, hi, decreasing=True, iters=200, rtol=1e-10, scale=1.0):
    """Geometric bisection for monotone ``fn``; stops when ``|fn - target| < rtol * scale``."""
    sign = 1.0 if decreasing else -1.0
    mid = math.sqrt(lo * hi)
    it = 0
    for it in range(1, iters + 1):
        mid = math.sqrt(lo * hi)
        r = fn(mid) - target
        if abs(r) < rtol * scale:
            break
        if sign * r > 0:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < 1e-15:
            break
    return mid, it


def maximize_1d(fn, lo, hi, n_grid=41, log=False, xatol=1e-10):
    """Grid scan then bounded Brent refinement around the best grid cell; returns ``(x, f(x))``."""
    if log:
        grid = np.geomspace(lo, hi, n_grid)
    else:
        grid = np.linspace(lo, hi, n_grid)
    vals = np.array([fn(x) for x in grid])
    vals = np.where(np.isnan(vals), -np.inf, vals)
    i = int(np.argmax(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, n_grid - 1)]
    if a == b:
        return float(grid[i]), float(vals[i])
    if log:
        res = optimize.minimize_scalar(
            lambda t: -fn(math.exp(t)), bounds=(math.log(a), math.log(b)), method="bounded", options={"xatol": xatol}
        )
        x = math.exp(res.x)
    else:
        res = optimize.minimize_scalar(lambda t: -fn(t), bounds=(a, b), method="bounded", options={"xatol": xatol})
        x = float(res.x)
    fx = fn(x)
    if fx >= vals[i]:
        return x, float(fx)
    return float(grid[i]), float(vals[i])
