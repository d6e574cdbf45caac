"""Path kernels for the stopping-rule simulator.

Normals come from a counter-based generator: step ``k`` of stream ``j`` is a
pure function of ``(seed, j, k)`` (splitmix64 hashing plus Box-Muller), so a
path is reproducible in isolation and results do not depend on scheduling.
The numba kernel and the numpy fallback draw identical normals.

Set ``DISTORT_STOP_DISABLE_NUMBA=1`` to force the numpy path and
``DISTORT_STOP_THREADS`` to cap the numba thread count.
"""
from __future__ import annotations

import math
import os

import numpy as np

RULE_STOP_NOW = 0
RULE_HOLD = 1
RULE_EXIT = 2
RULE_DRAWDOWN = 3
RULE_BARYCENTER = 4
RULE_HIT_BELOW = 5
RULE_HIT_ABOVE = 6

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO53 = 1.0 / 9007199254740992.0
_TWO_PI = 2.0 * math.pi

DISABLE_NUMBA = os.environ.get("DISTORT_STOP_DISABLE_NUMBA", "0") not in ("", "0", "false", "False")

try:  # pragma: no cover - import guard
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
    # skip the probe of an old system TBB; omp/workqueue are picked automatically
    if numba.config.THREADING_LAYER == "default":
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLE_NUMBA


def set_threads():
    """Apply ``DISTORT_STOP_THREADS`` to numba (no effect on the numpy path)."""
    n = os.environ.get("DISTORT_STOP_THREADS")
    if USE_NUMBA and n:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


# ---------------------------------------------------------------------------
# numpy reference
# ---------------------------------------------------------------------------


def _mix_np(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_keys(seed, streams):
    """Per-stream 64-bit keys."""
    streams = np.asarray(streams, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix_np(np.uint64(seed) ^ _mix_np(streams * _GOLDEN + _GOLDEN))


def normals_np(keys, step):
    """Standard normal for ``step`` of each stream (vectorized over keys)."""
    pair = np.uint64(step // 2)
    with np.errstate(over="ignore"):
        h1 = _mix_np(keys + (np.uint64(2) * pair + np.uint64(1)) * _GOLDEN)
        h2 = _mix_np(keys + (np.uint64(2) * pair + np.uint64(2)) * _GOLDEN)
    u1 = 1.0 - (h1 >> np.uint64(11)).astype(np.float64) * _TWO53
    u2 = (h2 >> np.uint64(11)).astype(np.float64) * _TWO53
    r = np.sqrt(-2.0 * np.log(u1))
    return r * np.cos(_TWO_PI * u2) if step % 2 == 0 else r * np.sin(_TWO_PI * u2)


def lookup_level_np(m, psi, x, tail_finite):
    """Vectorized ``sup{x: Psi(x) <= m}`` on a knot table."""
    j = np.searchsorted(psi, m, side="right") - 1
    last = psi.size - 1
    jc = np.clip(j, 0, last - 1 if last > 0 else 0)
    x0, x1 = x[jc], x[np.minimum(jc + 1, last)]
    p0, p1 = psi[jc], psi[np.minimum(jc + 1, last)]
    flat = (x1 == x0) | (p1 == p0)
    with np.errstate(divide="ignore", invalid="ignore"):
        lin = np.where(flat, x0, x0 + (m - p0) / np.where(flat, 1.0, p1 - p0) * (x1 - x0))
    top = m if tail_finite else x[last] * m / psi[last]
    out = np.where(j >= last, top, lin)
    return np.where(j < 0, 0.0, out)


def _triggered_np(kind, prm, S, M, level):
    if kind == RULE_EXIT:
        return (S <= prm[0]) | (S >= prm[1])
    if kind == RULE_DRAWDOWN:
        return S <= prm[0] * M
    if kind == RULE_BARYCENTER:
        return S <= level
    if kind == RULE_HIT_BELOW:
        return S <= prm[0]
    if kind == RULE_HIT_ABOVE:
        return S >= prm[0]
    return np.zeros(S.shape, dtype=bool)


def _boundary_np(kind, prm, S, M, level):
    """Boundary value crossed by a triggered path."""
    if kind == RULE_EXIT:
        return np.where(S <= prm[0], prm[0], prm[1])
    if kind == RULE_DRAWDOWN:
        return prm[0] * M
    if kind == RULE_BARYCENTER:
        return level
    if kind in (RULE_HIT_BELOW, RULE_HIT_ABOVE):
        return np.full(S.shape, prm[0])
    return S


def simulate_np(kind, prm, psi, xk, tail_finite, s, vol, dt, n_steps, seed, n_paths, antithetic, snap=False):
    """Reference implementation: loop over steps, vectorized over live paths."""
    paths = np.arange(n_paths)
    streams = paths // 2 if antithetic else paths
    sign = np.where(antithetic & (paths % 2 == 1), -1.0, 1.0)
    keys = stream_keys(seed, streams)
    values = np.full(n_paths, s)
    times = np.zeros(n_paths)
    capped = np.zeros(n_paths, dtype=np.bool_)
    if kind == RULE_STOP_NOW:
        return values, times, capped
    logS = np.full(n_paths, math.log(s))
    S = np.full(n_paths, s)
    M = S.copy()
    level = lookup_level_np(M, psi, xk, tail_finite) if kind == RULE_BARYCENTER else M
    live = ~_triggered_np(kind, prm, S, M, level)
    drift = -0.5 * vol * vol * dt
    sd = vol * math.sqrt(dt)
    idx = np.nonzero(live)[0]
    for k in range(n_steps):
        if idx.size == 0:
            break
        z = normals_np(keys[idx], k) * sign[idx]
        logS[idx] += drift + sd * z
        Sk = np.exp(logS[idx])
        S[idx] = Sk
        Mk = np.maximum(M[idx], Sk)
        if kind == RULE_BARYCENTER:
            grew = Mk > M[idx]
            if grew.any():
                lv = level[idx]
                lv[grew] = lookup_level_np(Mk[grew], psi, xk, tail_finite)
                level[idx] = lv
        M[idx] = Mk
        lvk = level[idx]
        hit = _triggered_np(kind, prm, Sk, Mk, lvk)
        done = idx[hit]
        values[done] = _boundary_np(kind, prm, Sk[hit], Mk[hit], lvk[hit]) if snap else Sk[hit]
        times[done] = (k + 1) * dt
        idx = idx[~hit]
    values[idx] = S[idx]
    times[idx] = n_steps * dt
    capped[idx] = True
    return values, times, capped


# ---------------------------------------------------------------------------
# numba kernel
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True, inline="always")
    def _mix(z):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))

    @njit(cache=True)
    def _lookup(m, psi, x, tail_finite):
        last = psi.size - 1
        lo, hi = 0, psi.size
        while lo < hi:  # searchsorted right
            mid = (lo + hi) // 2
            if psi[mid] <= m:
                lo = mid + 1
            else:
                hi = mid
        j = lo - 1
        if j < 0:
            return 0.0
        if j >= last:
            if tail_finite:
                return m
            return x[last] * m / psi[last]
        if x[j + 1] == x[j] or psi[j + 1] == psi[j]:
            return x[j]
        return x[j] + (m - psi[j]) / (psi[j + 1] - psi[j]) * (x[j + 1] - x[j])

    @njit(cache=True, inline="always")
    def _hit(kind, prm, S, M, level):
        if kind == 2:
            return S <= prm[0] or S >= prm[1]
        if kind == 3:
            return S <= prm[0] * M
        if kind == 4:
            return S <= level
        if kind == 5:
            return S <= prm[0]
        if kind == 6:
            return S >= prm[0]
        return False

    @njit(cache=True, inline="always")
    def _boundary(kind, prm, S, M, level):
        if kind == 2:
            return prm[0] if S <= prm[0] else prm[1]
        if kind == 3:
            return prm[0] * M
        if kind == 4:
            return level
        if kind == 5 or kind == 6:
            return prm[0]
        return S

    @njit(cache=True, parallel=True)
    def simulate_nb(kind, prm, psi, xk, tail_finite, s, vol, dt, n_steps, seed, n_paths, antithetic, snap):
        values = np.full(n_paths, s)
        times = np.zeros(n_paths)
        capped = np.zeros(n_paths, dtype=np.bool_)
        if kind == 0:
            return values, times, capped
        golden = np.uint64(0x9E3779B97F4A7C15)
        drift = -0.5 * vol * vol * dt
        sd = vol * math.sqrt(dt)
        logs0 = math.log(s)
        for p in prange(n_paths):
            stream = np.uint64(p // 2) if antithetic else np.uint64(p)
            sign = -1.0 if (antithetic and p % 2 == 1) else 1.0
            key = _mix(np.uint64(seed) ^ _mix(stream * golden + golden))
            logS = logs0
            S = s
            M = s
            level = _lookup(M, psi, xk, tail_finite) if kind == 4 else M
            if _hit(kind, prm, S, M, level):
                continue
            stopped = False
            z1 = 0.0
            for k in range(n_steps):
                if k % 2 == 0:
                    pair = np.uint64(k // 2)
                    h1 = _mix(key + (np.uint64(2) * pair + np.uint64(1)) * golden)
                    h2 = _mix(key + (np.uint64(2) * pair + np.uint64(2)) * golden)
                    u1 = 1.0 - np.float64(h1 >> np.uint64(11)) * 1.1102230246251565e-16
                    u2 = np.float64(h2 >> np.uint64(11)) * 1.1102230246251565e-16
                    r = math.sqrt(-2.0 * math.log(u1))
                    z = r * math.cos(6.283185307179586 * u2)
                    z1 = r * math.sin(6.283185307179586 * u2)
                else:
                    z = z1
                logS += drift + sd * (sign * z)
                S = math.exp(logS)
                if S > M:
                    M = S
                    if kind == 4:
                        level = _lookup(M, psi, xk, tail_finite)
                if _hit(kind, prm, S, M, level):
                    values[p] = _boundary(kind, prm, S, M, level) if snap else S
                    times[p] = (k + 1) * dt
                    stopped = True
                    break
            if not stopped:
                values[p] = S
                times[p] = n_steps * dt
                capped[p] = True
        return values, times, capped


def simulate(kind, prm, psi, xk, tail_finite, s, vol, dt, n_steps, seed, n_paths, antithetic, use_numba=None, snap=False):
    """Dispatch to the numba kernel or the numpy fallback."""
    use = USE_NUMBA if use_numba is None else (use_numba and HAVE_NUMBA)
    prm = np.ascontiguousarray(prm, dtype=np.float64)
    psi = np.ascontiguousarray(psi, dtype=np.float64)
    xk = np.ascontiguousarray(xk, dtype=np.float64)
    args = (int(kind), prm, psi, xk, bool(tail_finite), float(s), float(vol), float(dt), int(n_steps), int(seed) & 0xFFFFFFFFFFFFFFFF, int(n_paths), bool(antithetic), bool(snap))
    if use:
        set_threads()
        return simulate_nb(*args)
    return simulate_np(*args)
