"""Numba kernel vs numpy fallback on the drawdown and exit-interval rules.

Usage: python3 benchmarks/bench_kernels.py [--paths N] [--dt X] [--repeat R]

Both backends draw the same normals, so the script also checks that the
stopped samples agree before reporting timings.
"""
import argparse
import time

import numpy as np

from distort_stop import _kernels
from distort_stop.embedding import DrawdownFraction, ExitInterval
from distort_stop.model import MarketParams
from distort_stop.montecarlo import PathConfig, run_rule

CASES = {
    "drawdown(0.5), s=1": (DrawdownFraction(0.5), MarketParams(0.0, 1.0, 1.0)),
    "exit(1,3), s=2": (ExitInterval(1.0, 3.0), MarketParams(0.0, 1.0, 2.0)),
}


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--dt", type=float, default=1e-4)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    cfg = PathConfig(n_paths=args.paths, dt=args.dt)

    # warm up the jit so compile time is not charged to the first case
    run_rule(DrawdownFraction(0.5), MarketParams(0.0, 1.0, 1.0), PathConfig(n_paths=4, dt=1e-2), use_numba=True)

    print(f"{'case':<22}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'max |diff|':>13}")
    for name, (rule, market) in CASES.items():
        t_np, r_np = best_of(lambda: run_rule(rule, market, cfg, use_numba=False), args.repeat)
        t_nb, r_nb = best_of(lambda: run_rule(rule, market, cfg, use_numba=True), args.repeat)
        diff = float(np.max(np.abs(r_np.values - r_nb.values)))
        print(f"{name:<22}{t_np:>12.3f}{t_nb:>12.3f}{t_np / t_nb:>10.1f}{diff:>13.2e}")


if __name__ == "__main__":
    main()
