"""Case dispatch over the shapes of the transformed payoff ``u`` and the distortion ``w``."""
from __future__ import annotations

import math

from ..model import DistortionFn, PayoffCurve, TransformedPayoff
from .base import (
    ATTAINED,
    INFINITE,
    SUPREMUM,
    ProblemSpec,
    Solution,
    SolverFailure,
    SolverOptions,
    UnsupportedRegime,
)
from .lagrange import (
    power_rsq_a,
    power_rsq_g,
    power_rsq_psi,
    power_sequence_value,
    solve_concave_concave,
    solve_concave_reverse_s,
    solve_concave_s,
    solve_power_rsq,
    solve_power_power,
)
from .sshaped import solve_sshaped_reverse_s
from .threshold import solve_convex_u, solve_degenerate, solve_nonincreasing, solve_two_threshold, two_point_value


def _is_power_rsq(u: PayoffCurve, w: DistortionFn) -> bool:
    pf = u.power_form()
    return pf is not None and pf[1] < 1.0 and w.kind == "reverse_s_quadratic" and w.q == 0.5


def route(u: PayoffCurve, w: DistortionFn) -> str:
    """Name of the sub-solver for a shape pair; raises UnsupportedRegime when none applies."""
    us, ws = u.shape, w.shape
    if us == "nonincreasing":
        return "nonincreasing"
    if us in ("convex", "linear"):
        return "convex_u"
    if ws in ("linear", "convex"):
        return "two_threshold"
    if us == "concave":
        if ws == "concave":
            return "concave_concave"
        if ws == "reverse_s":
            return "power_rsq" if _is_power_rsq(u, w) else "concave_reverse_s"
        if ws == "s_shaped":
            return "concave_s"
    if us == "s_shaped" and ws == "reverse_s":
        return "sshaped_reverse_s"
    detail = "use the brute-force oracle for this pair"
    raise UnsupportedRegime(us, ws, detail)


def solve_u(u: PayoffCurve, w: DistortionFn, s: float, opts: SolverOptions = SolverOptions()) -> Solution:
    """Solve the quantile problem for a payoff already on the martingale scale."""
    if not s > 0:
        raise ValueError(f"initial state s must be positive, got {s}")
    name = route(u, w)
    if name == "nonincreasing":
        sol = solve_nonincreasing(u, s)
    elif name == "convex_u":
        sol = solve_convex_u(u, w, s, opts)
    elif name == "two_threshold":
        sol = solve_two_threshold(u, w, s, opts)
    elif name == "concave_concave":
        sol = solve_concave_concave(u, w, s, opts)
    elif name == "power_rsq":
        C, g = u.power_form()
        sol = solve_power_rsq(g, s, C=C, u=u)
    elif name == "concave_reverse_s":
        sol = solve_concave_reverse_s(u, w, s, opts)
    elif name == "concave_s":
        sol = solve_concave_s(u, w, s, opts)
    else:
        sol = solve_sshaped_reverse_s(u, w, s, opts)
    sol.diagnostics.setdefault("route", name)
    sol.diagnostics.setdefault("u_shape", u.shape)
    sol.diagnostics.setdefault("w_shape", w.shape)
    if sol.g_star is not None and math.isfinite(sol.value) and u.shape != "nonincreasing":
        b = sol.g_star.budget()
        sol.diagnostics["budget"] = b
        # monotone u: a slack budget could be spent, so the constraint should bind
        sol.diagnostics["budget_binds"] = bool(abs(b - s) <= 1e-9 * max(s, 1.0))
    return sol


def solve(spec: ProblemSpec) -> Solution:
    """Dispatch a market/payoff/distortion triple to the matching regime solver."""
    opts = spec.options
    if spec.market.degenerate:
        if spec.payoff is None:
            raise ValueError("the degenerate case needs the price-scale payoff U")
        sol = solve_degenerate(spec.payoff, spec.market.p0)
        sol.diagnostics.setdefault("route", "degenerate")
        return sol
    s = spec.market.s
    u = spec.u
    if u is None:
        u = TransformedPayoff(
            spec.payoff, spec.market.beta, declared_shape=spec.declared_shape, verify=opts.verify_shapes, s_ref=s
        )
    return solve_u(u, spec.distortion, s, opts)


__all__ = [
    "ATTAINED",
    "INFINITE",
    "SUPREMUM",
    "ProblemSpec",
    "Solution",
    "SolverFailure",
    "SolverOptions",
    "UnsupportedRegime",
    "power_rsq_a",
    "power_rsq_g",
    "power_rsq_psi",
    "power_sequence_value",
    "route",
    "solve",
    "solve_concave_concave",
    "solve_concave_reverse_s",
    "solve_concave_s",
    "solve_convex_u",
    "solve_degenerate",
    "solve_power_rsq",
    "solve_nonincreasing",
    "solve_power_power",
    "solve_sshaped_reverse_s",
    "solve_two_threshold",
    "solve_u",
    "two_point_value",
]
