import json
import math

import pytest

from detmodes.cli import main

BASE = {
    "geometry": {"L": 2 * math.pi, "gamma": 1.0},
    "spectrum": {"count": 50},
    "constants": {"cutoff": 2000, "tolerance": 1e-4},
    "sim": {"nu": 0.05, "mu": 0.5, "dt": 0.05, "t_end": 2.0, "grid": 32,
            "forcing": {"kind": "kolmogorov", "s": 1, "amplitude": 0.075}},
    "sync": {"coupling": {"kind": "mode_projection", "m": "theory"}, "seeds": [0], "horizon": 60},
    "inequalities": {"cases": ["agmon_scalar", "node_H1"], "samples": 30},
}


def _run(tmp_path, command, cfg, *extra):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    out = tmp_path / command
    code = main([command, "--config", str(p), "--out", str(out), *extra])
    return code, out


@pytest.mark.parametrize("command,files", [
    ("spectrum", ["spectrum.csv", "spectrum_bounds.json"]),
    ("constants", ["constants.json"]),
    ("thresholds", ["thresholds.json", "attractor_dimension.json"]),
    ("simulate", ["trajectory.csv", "final.bin", "final.bin.json", "simulate_summary.json"]),
    ("sync", ["sync_seed0.csv", "sync_summary.json"]),
    ("verify-inequalities", ["inequalities.json"]),
])
def test_commands(tmp_path, command, files):
    code, out = _run(tmp_path, command, BASE)
    assert code == 0
    for f in files + ["manifest.json"]:
        assert (out / f).exists()
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == command and len(man["config_hash"]) == 64
    assert "numpy" in man["versions"]


def test_thresholds_match_hand_arithmetic(tmp_path):
    cfg = {"geometry": {"L": 1.0}, "thresholds": {"nu": 1.0, "mu": 1.0, "F_inf": 100.0, "f_L2": 100.0}}
    code, out = _run(tmp_path, "thresholds", cfg)
    assert code == 0
    counts = {r["theorem_id"]: r["required_count"] for r in json.loads((out / "thresholds.json").read_text())}
    assert counts["nodes_periodic"] == 466
    assert counts["nodes_damped"] == 825
    assert counts["modes_damped_square"] == math.ceil(100 / math.pi**2) - 1


def test_constants_below_one_over_pi(tmp_path):
    code, out = _run(tmp_path, "constants", {})
    assert code == 0
    assert 0 < json.loads((out / "constants.json").read_text())["c_AT_sq"] < 1 / math.pi


def test_deterministic(tmp_path):
    cfg = dict(BASE)
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir(), b.mkdir()
    for d in (a, b):
        assert _run(d, "simulate", cfg, "--seed", "3")[0] == 0
        assert _run(d, "verify-inequalities", cfg)[0] == 0
    for rel in ("simulate/trajectory.csv", "simulate/simulate_summary.json", "simulate/final.bin",
                "verify-inequalities/inequalities.json"):
        assert (a / rel).read_bytes() == (b / rel).read_bytes()


@pytest.mark.parametrize("cfg", [
    {"geometry": {"gamma": 2}},
    {"bogus": {}},
    {"constants": {"cutoff": "many"}},
    {"sim": {"nu": 0.1, "grid": 33}},
])
def test_schema_errors(tmp_path, cfg, capsys):
    cmd = "simulate" if "sim" in cfg else "constants"
    code, _ = _run(tmp_path, cmd, cfg)
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["constants", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 2


def test_numerical_failure(tmp_path):
    cfg = dict(BASE)
    cfg["sync"] = {"coupling": {"kind": "mode_projection", "m": 0}, "seeds": [0], "horizon": 1.0,
                   "search": [0, 2]}
    code, _ = _run(tmp_path, "sync", cfg)
    assert code == 3


def test_violation_exit(tmp_path, monkeypatch):
    import detmodes.cli as cli
    from detmodes.inequalities import InequalityCase

    monkeypatch.setattr(cli, "default_case", lambda name, gamma: InequalityCase(name, 1e-6, gamma))
    code, _ = _run(tmp_path, "verify-inequalities", BASE)
    assert code == 4
