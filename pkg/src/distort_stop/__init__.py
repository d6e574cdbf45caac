"""Optimal stopping of a geometric Brownian motion under probability distortion.

The stopped state is worked on the martingale scale ``S = P**beta``.  The
solver picks the optimal law of ``S_tau`` through its quantile function, the
embedding module turns that law into a stopping rule, and the Monte Carlo and
oracle modules check both independently.
"""
from .embedding import (
    BarycenterRule,
    DrawdownFraction,
    ExitInterval,
    HitLevel,
    HoldForever,
    StopNow,
    azema_yor_rule,
    barycenter,
    exit_rule,
    invert_barycenter,
    rule_from_dict,
)
from .model import (
    CurvePayoff,
    DistortionFn,
    MarketParams,
    ModelError,
    PayoffFn,
    ShapeError,
    TransformedPayoff,
    compute_beta,
    transform_payoff,
    verify_distortion,
    verify_payoff_shape,
)
from .montecarlo import PathConfig, SimReport, ks_distance, mc_choquet, run_rule, simulate_paths
from .oracle import StepCdf, StepQuantile, brute_force_quantile, decompose_n_step, decompose_three_step
from .quantile import Cdf, QuantileFn, choquet_value_dist, choquet_value_quantile, left_inverse
from .solver import (
    ATTAINED,
    INFINITE,
    SUPREMUM,
    ProblemSpec,
    Solution,
    SolverFailure,
    SolverOptions,
    UnsupportedRegime,
    solve,
    solve_u,
)

__version__ = "0.1.0"

__all__ = [
    "ATTAINED",
    "INFINITE",
    "SUPREMUM",
    "BarycenterRule",
    "Cdf",
    "CurvePayoff",
    "DistortionFn",
    "DrawdownFraction",
    "ExitInterval",
    "HitLevel",
    "HoldForever",
    "MarketParams",
    "ModelError",
    "PathConfig",
    "PayoffFn",
    "ProblemSpec",
    "QuantileFn",
    "ShapeError",
    "SimReport",
    "Solution",
    "SolverFailure",
    "SolverOptions",
    "StepCdf",
    "StepQuantile",
    "StopNow",
    "TransformedPayoff",
    "UnsupportedRegime",
    "azema_yor_rule",
    "barycenter",
    "brute_force_quantile",
    "choquet_value_dist",
    "choquet_value_quantile",
    "compute_beta",
    "decompose_n_step",
    "decompose_three_step",
    "exit_rule",
    "invert_barycenter",
    "ks_distance",
    "left_inverse",
    "mc_choquet",
    "rule_from_dict",
    "run_rule",
    "simulate_paths",
    "solve",
    "solve_u",
    "transform_payoff",
    "verify_distortion",
    "verify_payoff_shape",
]
