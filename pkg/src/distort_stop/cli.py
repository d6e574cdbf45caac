"""Command line front end: ``distort-stop {solve,simulate,oracle,decompose} --config FILE``.

Exit codes: 0 on success (flagged infinite or supremum results included),
2 on a user error or an unsupported regime, 3 when a numerical solver fails.
"""
from __future__ import annotations

import argparse
import csv
import difflib
import json
import math
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema

from .embedding import BarycenterRule, DrawdownFraction, EmbeddingError, barycenter, rule_from_dict
from .model import DistortionFn, MarketParams, ModelError, PayoffFn, TransformedPayoff
from .quantile import export_cdf_csv, export_quantile_csv

EXIT_OK, EXIT_USER, EXIT_SOLVER = 0, 2, 3


class ConfigError(ValueError):
    pass


def load_schema() -> dict:
    return json.loads(resources.files("distort_stop").joinpath("schema/config.schema.json").read_text())


def _suggest(err: jsonschema.ValidationError) -> str:
    if err.validator == "enum":
        close = difflib.get_close_matches(str(err.instance), [str(v) for v in err.validator_value], n=3)
        hint = f"; did you mean {', '.join(close)}?" if close else ""
        return f"expected one of {list(err.validator_value)}{hint}"
    if err.validator == "additionalProperties":
        allowed = list(err.schema.get("properties", {}))
        extra = [k for k in err.instance if k not in allowed]
        hints = []
        for k in extra:
            close = difflib.get_close_matches(k, allowed, n=1)
            hints.append(f"{k!r}" + (f" (did you mean {close[0]!r}?)" if close else ""))
        return f"unknown key(s) {', '.join(hints)}; allowed: {allowed}"
    return err.message


def validate_config(cfg: dict) -> dict:
    """Schema check with field paths and suggestions; raises ConfigError listing every problem."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = []
        for e in errors:
            where = "/".join(map(str, e.absolute_path)) or "<root>"
            lines.append(f"{where}: {_suggest(e)}")
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(lines))
    return cfg


def parse_config(path) -> dict:
    """Read and validate a JSON run configuration."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        cfg = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return validate_config(cfg)


# ---------------------------------------------------------------------------
# building objects
# ---------------------------------------------------------------------------


def _require(cfg, *keys):
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"configuration needs section(s) {missing}")


def build_market(cfg) -> MarketParams:
    m = cfg["market"]
    return MarketParams(float(m["mu"]), float(m["sigma"]), float(m["p0"]))


def build_payoff(cfg) -> PayoffFn:
    p = cfg["payoff"]
    params = dict(p.get("params", {}))
    for key in ("knots", "values"):
        if key in params:
            params[key] = tuple(map(float, params[key]))
    return PayoffFn(p["kind"], params)


def build_distortion(cfg) -> DistortionFn:
    d = cfg["distortion"]
    return DistortionFn(d["kind"], dict(d.get("params", {})))


def build_spec(cfg):
    from .solver import ProblemSpec, SolverOptions

    _require(cfg, "market", "payoff", "distortion")
    opts = SolverOptions(**cfg.get("solver", {}))
    return ProblemSpec(
        market=build_market(cfg),
        payoff=build_payoff(cfg),
        distortion=build_distortion(cfg),
        options=opts,
        declared_shape=cfg["payoff"].get("declared_shape"),
    )


def build_u(spec):
    m = spec.market
    return TransformedPayoff(
        spec.payoff, m.beta, declared_shape=spec.declared_shape, verify=spec.options.verify_shapes, s_ref=m.s
    )


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _clean(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "item"):
        return _clean(v.item())
    return v


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _out_dir(args, cfg) -> Path:
    out = Path(args.out or cfg.get("output_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _headline(sol) -> dict:
    """Named quantities pulled out of the solver parameters."""
    p, r = sol.params, sol.rule.to_dict()
    keys = {"a_star": ("a", "a_star"), "b_star": ("b", "b_star"), "lambda_star": ("lambda",), "eta": ("eta",), "cbar_star": ("cbar",)}
    out = {}
    for name, cands in keys.items():
        for c in cands:
            if c in p:
                out[name] = p[c]
                break
    if r["kind"] == "exit_interval":
        out.setdefault("a_star", r["a"])
        out.setdefault("b_star", r["b"])
    if r["kind"] == "drawdown_fraction":
        out.setdefault("eta", r["eta"])
    return out


def _psi_for(sol):
    if isinstance(sol.rule, BarycenterRule):
        return sol.rule.psi
    if isinstance(sol.rule, DrawdownFraction) and sol.f_star is not None:
        return barycenter(sol.f_star, sol.s, G=sol.g_star)
    return None


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_solve(cfg, args) -> int:
    from .solver import solve

    spec = build_spec(cfg)
    sol = solve(spec)
    out = _out_dir(args, cfg)
    doc = sol.to_dict()
    doc.update(_headline(sol))
    write_json(out / "solution.json", doc)
    if sol.g_star is not None:
        export_quantile_csv(sol.g_star, out / "gstar.csv")
    if sol.f_star is not None:
        export_cdf_csv(sol.f_star, out / "fstar.csv")
    psi = _psi_for(sol)
    if psi is not None:
        psi.export_csv(out / "psi.csv")
    print(f"{sol.case}: status={sol.status} value={_clean(float(sol.value))} rule={sol.rule.to_dict()['kind']}")
    return EXIT_OK


def cmd_simulate(cfg, args) -> int:
    from .montecarlo import PathConfig, run_rule
    from .solver import solve

    _require(cfg, "market")
    market = build_market(cfg)
    sim = dict(cfg.get("simulate", {}))
    rule_doc = sim.pop("rule", None)
    if args.seed is not None:
        sim["seed"] = args.seed
    if args.paths is not None:
        sim["n_paths"] = args.paths
    if args.dt is not None:
        sim["dt"] = args.dt
    pc = PathConfig(**sim)
    target = u = w = None
    if rule_doc is not None:
        rule = rule_from_dict(rule_doc)
        if "payoff" in cfg and "distortion" in cfg:
            spec = build_spec(cfg)
            u, w = build_u(spec), spec.distortion
    elif "payoff" in cfg and "distortion" in cfg:
        spec = build_spec(cfg)
        sol = solve(spec)
        rule, target = sol.rule, sol.f_star
        u, w = build_u(spec), spec.distortion
    else:
        raise ConfigError("simulate needs simulate.rule or a payoff/distortion pair to solve for one")
    rep = run_rule(rule, market, pc, target=target, u=u, w=w)
    elapsed = rep.extras.pop("elapsed_s", None)
    out = _out_dir(args, cfg)
    write_json(out / "sim_report.json", rep.to_dict())
    rep.export_csv(out / "stopped_samples.csv")
    ks = "n/a" if rep.ks_to_target is None else f"{rep.ks_to_target:.4f}"
    print(
        f"simulated {rep.n_paths} paths in {elapsed:.1f}s: mean={rep.mean_stopped:.5f}"
        f" (se {rep.se_mean:.5f}) capped={rep.capped_fraction:.4%} ks={ks}"
    )
    return EXIT_OK


def cmd_oracle(cfg, args) -> int:
    from .oracle import brute_force_quantile

    spec = build_spec(cfg)
    opts = dict(cfg.get("oracle", {}))
    if args.seed is not None:
        opts["seed"] = args.seed
    res = brute_force_quantile(build_u(spec), spec.distortion, spec.market.s, **opts)
    out = _out_dir(args, cfg)
    res.to_json(out / "oracle.json")
    print(f"oracle ({res.mode}, n={res.n}): value={res.value:.8g}")
    return EXIT_OK


def read_step_cdf(path):
    """Step CDF from a CSV with header ``point,level``; levels are exact rationals like ``3/10``."""
    from .oracle import StepCdf

    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or {"point", "level"} - set(rows[0]):
        raise ConfigError(f"{path}: expected a header row 'point,level'")
    pts = [Fraction(r["point"].strip()) for r in rows]
    lv = [Fraction(r["level"].strip()) for r in rows]
    if lv[-1] != 1:
        raise ConfigError(f"{path}: the last level must be 1")
    return StepCdf(tuple(pts), tuple(lv[:-1]))


def _cdf_doc(F):
    return {"points": [str(a) for a in F.points], "levels": [str(c) for c in F.levels] + ["1"], "mean": str(F.mean())}


def cmd_decompose(cfg, args) -> int:
    from .oracle import check_reconstruction, decompose_n_step

    _require(cfg, "decompose")
    src = Path(cfg["decompose"]["input"])
    if not src.is_absolute() and args.config:
        src = Path(args.config).parent / src
    if not src.is_file():
        raise ConfigError(f"step CDF file not found: {src}")
    F = read_step_cdf(src)
    parts = decompose_n_step(F)
    doc = {
        "input": _cdf_doc(F),
        "components": [{"weight": str(t), **_cdf_doc(G)} for G, t in parts],
        "weights_sum": str(sum((t for _, t in parts), Fraction(0))),
        "exact_reconstruction": check_reconstruction(F, parts),
    }
    out = _out_dir(args, cfg)
    write_json(out / "decomposition.json", doc)
    print(f"{len(parts)} two-jump component(s), exact reconstruction: {doc['exact_reconstruction']}")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "simulate": cmd_simulate, "oracle": cmd_oracle, "decompose": cmd_decompose}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="distort-stop", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", help="output directory (overrides output_dir)")
        sp.add_argument("--seed", type=int, help="random seed override")
        sp.add_argument("--paths", type=int, help="number of simulated paths")
        sp.add_argument("--dt", type=float, help="simulation time step")
    return ap


def main(argv=None) -> int:
    from .solver import SolverFailure, UnsupportedRegime

    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except UnsupportedRegime as exc:
        print(json.dumps({"error": "unsupported_regime", "u_shape": exc.u_shape, "w_shape": exc.w_shape, "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return EXIT_USER
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, ModelError, EmbeddingError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
