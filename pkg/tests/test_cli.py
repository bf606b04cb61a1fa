import csv
import json

import pytest

from rbsde_lab.cli import CONFIG_SCHEMA, main, validate_config
from rbsde_lab.errors import ConfigInvalid

RIGHT_JUMP = {
    "lattice": {"N": 1, "T": 1.0},
    "obstacle": {"name": "step", "params": {"c": 1.0, "levels": {"0": 2.0}, "jumps": {"0": 2.0}}},
    "driver": {"name": "zero"},
}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_solve_right_jump_row(tmp_path):
    out = tmp_path / "out"
    assert main(["solve", "--config", write(tmp_path, RIGHT_JUMP), "--out", str(out)]) == 0
    root = rows(out / "solution.csv")[0]
    assert float(root["Y_v"]) == 2.0 and float(root["C_jump"]) == 1.0 and float(root["A_incr"]) == 0.0
    summary = json.loads((out / "solve_summary.json").read_text())
    assert summary["config"] == RIGHT_JUMP and summary["passed"]


@pytest.mark.parametrize("marks", [[], [{"name": "u", "size": -0.3, "intensity": 0.2}]])
@pytest.mark.parametrize("N", [1, 2, 3])
def test_oracle_suite(tmp_path, N, marks):
    cfg = {"lattice": {"N": N, "marks": marks}, "obstacle": {"name": "random"},
           "driver": {"name": "constant", "params": {"c": 0.3}}}
    out = tmp_path / "out"
    assert main(["oracle", "--config", write(tmp_path, cfg), "--out", str(out), "--seed", "4"]) == 0
    checked = [r for r in rows(out / "oracle.csv") if r["status"] != "skipped"]
    assert checked and all(float(r["abs_diff"]) <= 1e-12 for r in checked)


def test_negative_intensity_rejected(tmp_path, capsys):
    cfg = {"lattice": {"N": 2, "marks": [{"name": "u", "intensity": -0.5}]}}
    assert main(["solve", "--config", write(tmp_path, cfg), "--check-only"]) != 0
    assert "lattice/marks/0/intensity" in capsys.readouterr().err
    with pytest.raises(ConfigInvalid) as exc:
        validate_config(cfg)
    assert exc.value.path == "lattice/marks/0/intensity"


def test_unknown_key_rejected():
    with pytest.raises(ConfigInvalid):
        validate_config({"lattice": {"N": 1}, "extra": 1})
    with pytest.raises(ConfigInvalid):
        validate_config({"lattice": {"N": 1, "depth": 3}})


def test_missing_config_file(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.json")]) == 2


@pytest.mark.parametrize("cmd", ["solve", "oracle", "penalize", "stop", "risk", "glcheck", "sweep"])
def test_deterministic_outputs(tmp_path, cmd):
    cfg = {"lattice": {"N": 2, "marks": [{"name": "u", "size": 0.1, "intensity": 0.3}]},
           "obstacle": {"name": "random", "params": {"lusc": True}},
           "obstacle_other": {"name": "constant", "params": {"c": 5.0}},
           "driver": {"name": "linear", "params": {"rho": 0.2, "a": 0.1}},
           "run": {"instances": 4, "beta": 25.0, "tol": 1e-16, "max_iter": 500}}
    path = write(tmp_path, cfg)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main([cmd, "--config", path, "--out", str(a), "--seed", "9"]) == 0
    assert main([cmd, "--config", path, "--out", str(b), "--seed", "9"]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir()) and len(files) >= 2
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_check_only_writes_nothing(tmp_path):
    out = tmp_path / "out"
    assert main(["glcheck", "--config", write(tmp_path, RIGHT_JUMP), "--out", str(out), "--check-only"]) == 0
    assert not out.exists()


def test_failed_check_sets_exit_code(tmp_path):
    cfg = {"lattice": {"N": 3, "marks": [{"name": "u", "intensity": 0.3}]}, "obstacle": {"name": "random"},
           "run": {"check_tol": 1e-300}}
    assert main(["solve", "--config", write(tmp_path, cfg), "--check-only", "--seed", "1"]) == 1


def test_bad_run_parameter(tmp_path):
    cfg = dict(RIGHT_JUMP, run={"n_list": [10, 1]})
    assert main(["penalize", "--config", write(tmp_path, cfg), "--check-only"]) == 2


def test_risk_paired_mode(tmp_path):
    cfg = dict(RIGHT_JUMP, obstacle_other={"name": "constant", "params": {"c": 3.0}})
    out = tmp_path / "out"
    assert main(["risk", "--config", write(tmp_path, cfg), "--out", str(out)]) == 0
    report = json.loads((out / "risk.json").read_text())
    assert report["ordered"] and report["violations"] == 0


def test_schema_command(capsys):
    assert main(["schema"]) == 0
    assert json.loads(capsys.readouterr().out) == json.loads(json.dumps(CONFIG_SCHEMA))
