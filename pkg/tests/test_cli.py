import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from distort_stop import cli
from distort_stop.solver import SolverFailure

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(argv):
    return cli.main([str(a) for a in argv])


def write_cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


BASE = {
    "market": {"mu": 0.0, "sigma": 1.0, "p0": 1.0},
    "payoff": {"kind": "power", "params": {"gamma": 0.5}},
    "distortion": {"kind": "power", "params": {"alpha": 0.75}},
}


def test_solve_power_power(tmp_path):
    assert run(["solve", "--config", CONFIGS / "power_power.json", "--out", tmp_path]) == 0
    doc = json.loads((tmp_path / "solution.json").read_text())
    assert doc["status"] == "attained"
    assert doc["value"] == pytest.approx(3 / 2**0.5, rel=1e-6)
    assert doc["eta"] == pytest.approx(0.5, abs=1e-6)
    for name in ("gstar.csv", "fstar.csv", "psi.csv"):
        assert (tmp_path / name).is_file()


def test_solve_is_byte_stable(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run(["solve", "--config", CONFIGS / "power_reverse_s.json", "--out", a])
    run(["solve", "--config", CONFIGS / "power_reverse_s.json", "--out", b])
    for f in a.iterdir():
        assert f.read_bytes() == (b / f.name).read_bytes()


def test_solve_stop_now_and_infinite(tmp_path):
    assert run(["solve", "--config", CONFIGS / "stop_now.json", "--out", tmp_path / "s"]) == 0
    assert json.loads((tmp_path / "s" / "solution.json").read_text())["rule"]["kind"] == "stop_now"
    assert run(["solve", "--config", CONFIGS / "infinite.json", "--out", tmp_path / "i"]) == 0
    doc = json.loads((tmp_path / "i" / "solution.json").read_text())
    assert doc["status"] == "infinite"


def test_simulate_rule_from_config(tmp_path):
    argv = ["simulate", "--config", CONFIGS / "exit_interval.json", "--paths", 2000, "--dt", 1e-3, "--seed", 4]
    assert run(argv + ["--out", tmp_path / "a"]) == 0
    assert run(argv + ["--out", tmp_path / "b"]) == 0
    rep = json.loads((tmp_path / "a" / "sim_report.json").read_text())
    assert rep["n_paths"] == 2000 and "hit_low_fraction" in rep["extras"]
    for name in ("sim_report.json", "stopped_samples.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_solves_for_rule(tmp_path):
    doc = dict(BASE, simulate={"n_paths": 1000, "dt": 1e-3, "t_cap": 10})
    assert run(["simulate", "--config", write_cfg(tmp_path, doc), "--out", tmp_path]) == 0
    rep = json.loads((tmp_path / "sim_report.json").read_text())
    assert rep["rule"]["kind"] == "drawdown_fraction"
    assert rep["ks_to_target"] is not None and rep["choquet_estimate"] is not None


def test_simulate_without_rule_or_problem(tmp_path):
    doc = {"market": BASE["market"], "simulate": {"n_paths": 10}}
    assert run(["simulate", "--config", write_cfg(tmp_path, doc), "--out", tmp_path]) == 2


def test_oracle(tmp_path):
    doc = dict(BASE, oracle={"n": 60})
    assert run(["oracle", "--config", write_cfg(tmp_path, doc), "--out", tmp_path]) == 0
    res = json.loads((tmp_path / "oracle.json").read_text())
    assert res["value"] == pytest.approx(3 / 2**0.5, rel=0.02)


def test_decompose(tmp_path):
    cfg = tmp_path / "decompose.json"
    shutil.copy(CONFIGS / "decompose.json", cfg)
    shutil.copy(CONFIGS / "three_step.csv", tmp_path / "three_step.csv")
    assert run(["decompose", "--config", cfg, "--out", tmp_path / "o"]) == 0
    doc = json.loads((tmp_path / "o" / "decomposition.json").read_text())
    assert doc["exact_reconstruction"] is True and doc["weights_sum"] == "1"


def test_decompose_bad_csv(tmp_path):
    (tmp_path / "f.csv").write_text("point,level\n1,1/2\n2,3/4\n")
    cfg = write_cfg(tmp_path, {"decompose": {"input": "f.csv"}})
    assert run(["decompose", "--config", cfg, "--out", tmp_path]) == 2


def test_schema_errors_are_listed(tmp_path, capsys):
    doc = {
        "market": {"mu": 0.0, "sigma": 1.0, "p0": 1.0, "sigam": 1},
        "payoff": {"kind": "powr"},
        "distortion": {"kind": "power", "params": {"alpha": 0.5}},
    }
    assert run(["solve", "--config", write_cfg(tmp_path, doc)]) == 2
    err = capsys.readouterr().err
    assert "did you mean 'sigma'" in err and "payoff/kind" in err


def test_malformed_json(tmp_path, capsys):
    p = tmp_path / "cfg.json"
    p.write_text('{"market": {"mu": 0.0,,}}')
    assert run(["solve", "--config", p]) == 2
    assert "line 1" in capsys.readouterr().err


def test_unsupported_regime_exit_code(tmp_path, capsys):
    doc = dict(BASE, payoff={"kind": "s_power", "params": {"alpha1": 2.0, "alpha2": 0.5, "k": 1.0}})
    doc["distortion"] = {"kind": "power", "params": {"alpha": 0.5}}
    assert run(["solve", "--config", write_cfg(tmp_path, doc), "--out", tmp_path]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "unsupported_regime" and err["u_shape"] == "s_shaped"


def test_model_error_exit_code(tmp_path):
    doc = dict(BASE, market={"mu": 0.0, "sigma": 1.0, "p0": -1.0})
    assert run(["solve", "--config", write_cfg(tmp_path, doc), "--out", tmp_path]) == 2


def test_solver_failure_exit_code(tmp_path, monkeypatch):
    def boom(spec):
        raise SolverFailure("no convergence")

    monkeypatch.setattr("distort_stop.solver.solve", boom)
    assert run(["solve", "--config", write_cfg(tmp_path, BASE), "--out", tmp_path]) == 3


def test_console_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "distort_stop", "solve", "--config", str(CONFIGS / "power_power.json"), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0 and "attained" in out.stdout
