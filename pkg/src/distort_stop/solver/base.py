"""Problem and solution types shared by the regime solvers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..embedding import StoppingRule
from ..model import DistortionFn, MarketParams, PayoffCurve, PayoffFn
from ..quantile import Cdf, QuantileFn

ATTAINED = "attained"
SUPREMUM = "supremum"
INFINITE = "infinite"


class UnsupportedRegime(ValueError):
    """No solver covers the requested (u, w) shape pair."""

    def __init__(self, u_shape, w_shape, detail=""):
        msg = f"unsupported regime: u {u_shape} with w {w_shape}"
        super().__init__(msg + (f" ({detail})" if detail else ""))
        self.u_shape, self.w_shape = u_shape, w_shape


class SolverFailure(RuntimeError):
    """A numerical sub-solver failed; carries the best incumbent when one exists."""

    def __init__(self, message, incumbent=None):
        super().__init__(message)
        self.incumbent = incumbent


@dataclass(frozen=True)
class SolverOptions:
    grid_a: int = 400
    grid_b: int = 400
    golden_iters: int = 60
    b_cap_max: float = 1e8
    a_floor_min: float = 1e-8
    lambda_iters: int = 200
    lambda_rtol: float = 1e-10
    tie_tol: float = 1e-10
    c_points: int = 50
    a_points: int = 60
    outer_points: int = 41
    verify_shapes: bool = True


@dataclass(frozen=True)
class ProblemSpec:
    """Market, payoff and distortion; ``u`` may be given directly on the martingale scale."""

    market: MarketParams
    payoff: Optional[PayoffFn]
    distortion: DistortionFn
    options: SolverOptions = field(default_factory=SolverOptions)
    declared_shape: Optional[str] = None
    u: Optional[PayoffCurve] = None


@dataclass
class Solution:
    """Outcome of a regime solver.

    ``value`` is on the payoff's own scale (the normalization offset of ``u`` is
    added back); ``status`` is one of attained / supremum / infinite.
    """

    case: str
    value: float
    status: str
    s: float
    rule: StoppingRule
    g_star: Optional[QuantileFn] = None
    f_star: Optional[Cdf] = None
    params: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    offset: float = 0.0

    @property
    def normalized_value(self) -> float:
        return self.value - self.offset

    @property
    def attained(self) -> bool:
        return self.status == ATTAINED

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, (float, np.floating)):
                v = float(v)
                if math.isinf(v):
                    return "inf" if v > 0 else "-inf"
                if math.isnan(v):
                    return "nan"
                return v
            if isinstance(v, (np.integer,)):
                return int(v)
            if isinstance(v, dict):
                return {str(k): clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v

        return {
            "case": self.case,
            "status": self.status,
            "value": clean(self.value),
            "s": clean(self.s),
            "offset": clean(self.offset),
            "rule": clean(self.rule.to_dict()),
            "params": clean(self.params),
            "diagnostics": clean(self.diagnostics),
        }


def finish(case, value_norm, status, s, rule, u=None, **kw) -> Solution:
    """Build a Solution, adding the payoff offset back to finite values."""
    offset = float(getattr(u, "offset", 0.0) or 0.0)
    value = value_norm + offset if math.isfinite(value_norm) else value_norm
    return Solution(case=case, value=value, status=status, s=s, rule=rule, offset=offset, **kw)
