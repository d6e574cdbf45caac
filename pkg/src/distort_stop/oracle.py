"""Brute-force verification: discretized quantile search and exact step-CDF decompositions.

The quantile search works on step quantiles over the uniform grid ``x_i = i/n``,
whose Choquet value is the finite sum ``sum_i u(g_i) [w(1-(i-1)/n) - w(1-i/n)]``.
Decompositions of step CDFs into two-jump laws run in rational arithmetic.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .quantile import Cdf, QuantileFn

DEFAULT_LEVELS = 200
N_STARTS = 20


# ---------------------------------------------------------------------------
# step quantiles
# ---------------------------------------------------------------------------


@dataclass
class StepQuantile:
    """Levels ``g_1 <= ... <= g_n`` on the cells ``((i-1)/n, i/n]``."""

    levels: np.ndarray

    def __post_init__(self):
        self.levels = np.asarray(self.levels, dtype=float)
        if self.levels.ndim != 1 or self.levels.size == 0:
            raise ValueError("StepQuantile needs a non-empty 1-d level array")
        if np.any(np.diff(self.levels) < 0) or self.levels[0] < 0:
            raise ValueError("StepQuantile levels must be nonnegative and nondecreasing")

    @property
    def n(self) -> int:
        return self.levels.size

    def budget(self) -> float:
        return float(self.levels.mean())

    def value(self, u, w) -> float:
        return float(step_value(self.levels, u, cell_weights(w, self.n)))

    def to_quantile(self) -> QuantileFn:
        return QuantileFn.steps(np.linspace(0.0, 1.0, self.n + 1), self.levels)


def cell_weights(w, n):
    """``w(1 - (i-1)/n) - w(1 - i/n)`` for ``i = 1..n``."""
    t = np.asarray(w(1.0 - np.arange(n + 1) / n), dtype=float)
    return t[:-1] - t[1:]


def _u(u, g):
    g = np.asarray(g, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(g > 0, np.asarray(u(np.maximum(g, 1e-300)), dtype=float), float(u(0.0)))


def step_value(levels, u, omega):
    """Exact Choquet value of step quantiles (rows of ``levels``)."""
    return _u(u, levels) @ omega


@dataclass
class OracleResult:
    quantile: StepQuantile
    value: float
    mode: str
    n: int
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        lv = self.quantile.levels
        return {
            "mode": self.mode,
            "n": self.n,
            "value": self.value if math.isfinite(self.value) else "inf",
            "budget": self.quantile.budget(),
            "levels": [float(x) for x in lv],
            "distinct_levels": [float(x) for x in np.unique(np.round(lv, 12))][:50],
            "diagnostics": self.diagnostics,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def level_grid(s, n_levels=DEFAULT_LEVELS, lo=1e-3, hi=1e3):
    """Log-spaced levels over ``[s*lo, s*hi]`` with ``s`` itself included."""
    g = np.geomspace(s * lo, s * hi, n_levels)
    return np.unique(np.concatenate((g, [s])))


def _two_level(u, w, s, n, L):
    """Exhaustive over ``a`` in the grid below ``s``, ``k`` low cells, ``b`` from the budget."""
    omega = cell_weights(w, n)
    W = np.concatenate(([0.0], np.cumsum(omega)))  # weight of the first k cells
    a = np.concatenate(([0.0], L[L <= s]))
    k = np.arange(0, n)
    A, K = np.meshgrid(a, k, indexing="ij")
    b = (n * s - K * A) / (n - K)
    val = _u(u, A) * W[K] + _u(u, b) * (W[-1] - W[K])
    val = np.where(np.isnan(val), -np.inf, val)
    i = int(np.argmax(val))
    ia, ik = divmod(i, k.size)
    kk = int(k[ik])
    levels = np.concatenate((np.full(kk, a[ia]), np.full(n - kk, b[ia, ik])))
    return levels, float(val[ia, ik])


def _lagrange_dp(f_vals):
    """Best nondecreasing path through ``f_vals[i, l]`` (cells x levels): ``V_i = f_i + cummax V_{i-1}``."""
    n, m = f_vals.shape
    arg = np.empty((n, m), dtype=np.int64)
    V = f_vals[0].copy()
    arg[0] = np.arange(m)
    for i in range(1, n):
        idx = np.arange(m)
        # running argmax of the previous row
        run = np.maximum.accumulate(V)
        best_prev = np.where(V == run, idx, 0)
        best_prev = np.maximum.accumulate(best_prev)
        arg[i] = best_prev
        V = f_vals[i] + run
    path = np.empty(n, dtype=np.int64)
    path[-1] = int(np.argmax(V))
    for i in range(n - 1, 0, -1):
        path[i - 1] = arg[i, path[i]]
    return path


def _dp_search(u, w, s, n, L, iters=80):
    omega = cell_weights(w, n)
    uL = _u(u, L)

    def solve(lam):
        path = _lagrange_dp(omega[:, None] * uL[None, :] - lam * L[None, :] / n)
        g = L[path]
        return g, float(g.mean())

    slope = np.max(np.diff(uL) / np.diff(L)) if L.size > 1 else 1.0
    hi = max(float(slope) * float(omega.max()) * n, 1e-12) * 4.0
    lo = hi * 1e-12
    g_hi, b_hi = solve(hi)
    best_feasible = g_hi if b_hi <= s else None
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        g, b = solve(mid)
        if b <= s:
            hi, best_feasible = mid, g
        else:
            lo = mid
        if hi / lo - 1 < 1e-9:
            break
    cands = []
    if best_feasible is not None:
        cands.append(best_feasible)
    g_lo, b_lo = solve(lo)
    if b_lo > 0:
        cands.append(g_lo * (s / b_lo))
    out = []
    for g in cands:
        b = float(g.mean())
        if b > 0:
            g = g * (s / b)  # uniform scaling onto the budget; u nondecreasing
        out.append((g, float(step_value(g, u, omega))))
    return out


def _ascent(g, u, omega, s, L, sweeps=4):
    """Coordinate ascent: move one level within its monotone window, rescale to the budget."""
    g = g.copy()
    n = g.size
    val = float(step_value(g, u, omega))
    for _ in range(sweeps):
        improved = False
        for i in range(n):
            lo = g[i - 1] if i > 0 else 0.0
            hi = g[i + 1] if i < n - 1 else L[-1]
            cand = L[(L >= lo) & (L <= hi)]
            if cand.size == 0:
                continue
            G = np.repeat(g[None, :], cand.size, axis=0)
            G[:, i] = cand
            bud = G.mean(axis=1)
            G *= (s / np.where(bud > 0, bud, 1.0))[:, None]
            vals = step_value(G, u, omega)
            j = int(np.argmax(vals))
            if vals[j] > val * (1 + 1e-12) + 1e-15:
                g, val, improved = G[j], float(vals[j]), True
        if not improved:
            break
    return g, val


def brute_force_quantile(u, w, s, n=200, level_grid_=None, mode="auto", seed=0, starts=N_STARTS, sweeps=2):
    """Best step quantile on ``n`` cells and its exact Choquet value.

    ``mode`` is ``"two_level"`` (exhaustive over the two-level family),
    ``"general"`` (Lagrangian DP over monotone steps plus coordinate ascent
    from seeded multi-starts) or ``"auto"`` (both).  The constant quantile
    ``G = s`` is always a candidate.
    """
    if mode not in ("auto", "two_level", "general"):
        raise ValueError(f"unknown oracle mode {mode!r}")
    L = level_grid(s) if level_grid_ is None else np.unique(np.asarray(level_grid_, dtype=float))
    omega = cell_weights(w, n)
    const = np.full(n, float(s))
    best_g, best_v, best_mode = const, float(step_value(const, u, omega)), "constant"
    diag = {}

    def take(g, v, tag):
        nonlocal best_g, best_v, best_mode
        if v > best_v * (1 + 1e-13) + 1e-15:
            best_g, best_v, best_mode = np.maximum.accumulate(g), v, tag

    if mode in ("auto", "two_level"):
        g, v = _two_level(u, w, s, n, L)
        diag["two_level_value"] = v
        take(g, v, "two_level")
    if mode in ("auto", "general"):
        dp = _dp_search(u, w, s, n, L)
        dp_best = max(dp, key=lambda t: t[1]) if dp else (const, -math.inf)
        diag["dp_value"] = dp_best[1]
        rng = np.random.default_rng(seed)
        starts_list = [dp_best[0], best_g]
        for _ in range(max(starts - len(starts_list), 0)):
            k = int(rng.integers(1, 6))
            lv = np.sort(rng.choice(L[L <= 10 * s], size=k))
            cuts = np.sort(rng.integers(0, n + 1, size=k - 1))
            g = np.repeat(lv, np.diff(np.concatenate(([0], cuts, [n]))))
            starts_list.append(g * (s / g.mean()))
        asc = []
        for g0 in starts_list:
            g, v = _ascent(np.asarray(g0, dtype=float), u, omega, s, L, sweeps=sweeps)
            asc.append(v)
            take(g, v, "general")
        diag["ascent_values"] = asc
    # grow the level grid upward and refine the cells: with n fixed the budget
    # bounds every level, so an unbounded value shows up as growth in n
    if mode in ("auto", "two_level"):
        L_big = np.unique(np.concatenate((L, np.geomspace(L[-1], L[-1] * 1e3, 60))))
        _, v_big = _two_level(u, w, s, n, L_big)
        _, v_fine = _two_level(u, w, s, 4 * n, L_big)
        diag["expanded_grid_value"] = v_big
        diag["refined_cells_value"] = v_fine
        ref = max(best_v, v_big)
        diag["infinite_suspected"] = bool(v_big > best_v * 1.05 + 1e-12 or v_fine > ref * 1.05 + 1e-12)
    return OracleResult(StepQuantile(best_g), best_v, best_mode, n, diag)


# ---------------------------------------------------------------------------
# step CDFs and their decompositions (exact)
# ---------------------------------------------------------------------------


def _frac(x):
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class StepCdf:
    """``F = sum_{i<n} c_i 1[a_i, a_{i+1}) + 1[a_n, inf)`` with rational entries."""

    points: Tuple[Fraction, ...]
    levels: Tuple[Fraction, ...]

    def __post_init__(self):
        pts = tuple(_frac(a) for a in self.points)
        lv = tuple(_frac(c) for c in self.levels)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "levels", lv)
        if len(pts) != len(lv) + 1 or not pts:
            raise ValueError("StepCdf needs one more point than levels")
        if any(a <= 0 for a in pts) or any(b < a for a, b in zip(pts, pts[1:])):
            raise ValueError("jump points must be positive and nondecreasing")
        full = lv + (Fraction(1),)
        if any(c < 0 for c in lv) or any(b < a for a, b in zip(full, full[1:])):
            raise ValueError("levels must be nondecreasing in [0, 1]")

    @property
    def n(self):
        return len(self.points)

    def __call__(self, x):
        x = _frac(x)
        full = self.levels + (Fraction(1),)
        out = Fraction(0)
        for a, c in zip(self.points, full):
            if x >= a:
                out = c
        return out

    def mean(self) -> Fraction:
        """``int_0^inf (1 - F)``."""
        a = self.points
        tot = a[0]
        for i, c in enumerate(self.levels):
            tot += (a[i + 1] - a[i]) * (1 - c)
        return tot

    def support_points(self):
        return self.points

    def simplify(self) -> "StepCdf":
        """Drop zero-length intervals and repeated levels."""
        pts, lv = [], []
        full = self.levels + (Fraction(1),)
        for a, c in zip(self.points, full):
            if pts and a == pts[-1]:
                lv[-1] = c
            elif lv and c == lv[-1]:
                continue
            else:
                pts.append(a)
                lv.append(c)
        # leading zero levels carry no mass
        while len(lv) > 1 and lv[0] == 0:
            pts.pop(0)
            lv.pop(0)
        return StepCdf(tuple(pts), tuple(lv[:-1]))

    def value(self, u, w) -> float:
        """``J_D(F) = int w(1 - F) u'`` for a step law."""
        a = [float(x) for x in self.points]
        tot = (float(w(1.0)) * (float(u(a[0])) - float(u(0.0))))
        for i, c in enumerate(self.levels):
            tot += float(w(1.0 - float(c))) * (float(u(a[i + 1])) - float(u(a[i])))
        return tot

    def to_cdf(self) -> Cdf:
        return Cdf.steps([float(a) for a in self.points], [float(c) for c in self.levels])


def _two(a1, a2, b) -> StepCdf:
    return StepCdf((a1, a2), (b,))


def decompose_three_step(F: StepCdf):
    """``F = theta F1 + (1 - theta) F2`` with two-jump ``F1, F2`` of the same mean."""
    if F.n <= 2:
        return F, F, Fraction(1)
    if F.n != 3:
        raise ValueError("decompose_three_step needs exactly three jump points")
    a1, a2, a3 = F.points
    c1, c2 = F.levels
    s0 = F.mean()
    if not (a1 < a2 < a3) or s0 == a1 or s0 == a3:
        return F, F, Fraction(1)
    b1 = (a3 - s0) / (a3 - a1)
    if s0 > a2:
        b2 = (a3 - s0) / (a3 - a2)
        return StepCdf((a1, a3), (b1,)), StepCdf((a2, a3), (b2,)), c1 / b1
    b2 = (a2 - s0) / (a2 - a1)
    theta1 = (c1 - c2 * b2) / (b1 * (1 - b2))
    return StepCdf((a1, a3), (b1,)), StepCdf((a1, a2), (b2,)), theta1


def _embed_low(F: StepCdf, Fbar: StepCdf, c3: Fraction) -> StepCdf:
    """``c3 1[a1, a4) Fbar + (rest of F from a4 on)``."""
    pts = list(Fbar.points)
    lv = [c3 * c for c in Fbar.levels] + [c3]
    pts.extend(F.points[3:])
    lv.extend(F.levels[3:])
    return StepCdf(tuple(pts), tuple(lv))


def decompose_n_step(F: StepCdf) -> List[Tuple[StepCdf, Fraction]]:
    """Recursive split into two-jump laws with weights summing to 1, all with the mean of ``F``."""
    if F.n <= 2:
        return [(F, Fraction(1))]
    if F.n == 3:
        F1, F2, th = decompose_three_step(F)
        if th == 1 and F1 is F:
            # a1 = s0 or s0 = a3: F already has two effective jumps
            return [(F.simplify(), Fraction(1))] if F.simplify().n <= 2 else _split_degenerate(F)
        return _merge(decompose_n_step(F1), th) + _merge(decompose_n_step(F2), 1 - th)
    c3 = F.levels[2]
    if c3 == 0:
        # nothing below a4 carries mass: drop the first three jumps
        G = StepCdf(F.points[2:], F.levels[2:]).simplify()
        return decompose_n_step(G)
    Fbar = StepCdf(F.points[:3], (F.levels[0] / c3, F.levels[1] / c3))
    B1, B2, th = decompose_three_step(Fbar)
    G1, G2 = _embed_low(F, B1, c3).simplify(), _embed_low(F, B2, c3).simplify()
    if th == 1:
        return decompose_n_step(G1) if G1.n < F.n else _split_degenerate(F)
    return _merge(decompose_n_step(G1), th) + _merge(decompose_n_step(G2), 1 - th)


def _split_degenerate(F: StepCdf):
    G = F.simplify()
    if G.n < F.n:
        return decompose_n_step(G)
    raise ValueError("step CDF cannot be reduced further")


def _merge(parts, weight):
    return [(G, weight * t) for G, t in parts if weight * t != 0]


def reconstruct(parts: Sequence[Tuple[StepCdf, Fraction]], xs) -> List[Fraction]:
    """``sum theta_k F_k(x)`` at each ``x``."""
    return [sum((t * G(x) for G, t in parts), Fraction(0)) for x in xs]


def check_reconstruction(F: StepCdf, parts) -> bool:
    """Exact pointwise equality at every jump point and between them."""
    pts = sorted(set(F.points).union(*(G.points for G, _ in parts)))
    probes = [pts[0] / 2] + pts + [(a + b) / 2 for a, b in zip(pts, pts[1:])] + [pts[-1] + 1]
    return all(r == F(x) for r, x in zip(reconstruct(parts, probes), probes))


def random_step_cdf(rng, n, max_den=20) -> StepCdf:
    """Random rational step CDF with ``n`` distinct jump points."""
    pts = sorted(set(int(v) for v in rng.integers(1, 10 * n * max_den, size=4 * n)))
    while len(pts) < n:
        pts.append(pts[-1] + 1)
    chosen = sorted(rng.choice(pts, size=n, replace=False).tolist())
    points = tuple(Fraction(int(a), max_den) for a in chosen)
    cs = sorted(Fraction(int(rng.integers(1, max_den)), max_den) for _ in range(n - 1))
    return StepCdf(points, tuple(cs))


__all__ = [
    "OracleResult",
    "StepCdf",
    "StepQuantile",
    "brute_force_quantile",
    "cell_weights",
    "check_reconstruction",
    "decompose_n_step",
    "decompose_three_step",
    "level_grid",
    "random_step_cdf",
    "reconstruct",
    "step_value",
]
