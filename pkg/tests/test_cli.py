import json
import subprocess
import sys
from pathlib import Path

import pytest

from qholo.cli import main
from qholo.config import schema_path, validate
from qholo.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return path


def run(tmp_path, command, config, *extra):
    out = tmp_path / f"{command}.out"
    code = main([command, "--config", str(config), "--output", str(out), *extra])
    return code, (out.read_text() if out.exists() else None)


def rows(text):
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    return header, [dict(zip(header, line.split(","))) for line in lines[1:]]


COLLINEAR = {
    "potential": {"kind": "power_law", "coupling": 1.0, "exponent": 1.0},
    "trajectory": {"kind": "collinear_static", "x": 1.0, "dx": 0.01},
    "times": [0.0, 1.0],
}


def test_evolve_collinear(tmp_path):
    code, text = run(tmp_path, "evolve", write(tmp_path, "c.json", COLLINEAR))
    assert code == 0
    header, data = rows(text)
    assert header == ["t", "phi", "concurrence"]
    assert float(data[0]["phi"]) == 0.0
    assert abs(float(data[1]["phi"]) - 1.9413706e-4) < 1e-11


def test_evolve_constant_potential(tmp_path):
    cfg = {
        "potential": {"kind": "constant", "value": 2.0},
        "trajectory": {"kind": "rotating_approach", "L": 1, "v": 0.05, "omega": 0.2, "x0": 0.1},
        "times": {"start": 0, "stop": 19, "num": 20},
    }
    code, text = run(tmp_path, "evolve", write(tmp_path, "c.json", cfg))
    assert code == 0
    _, data = rows(text)
    assert len(data) == 20
    assert all(float(r["concurrence"]) == 0.0 for r in data)


def test_evolve_sampled_relative_csv(tmp_path):
    lines = []
    for t, bx in ((0, 1.0), (2, 1.5), (4, 2.0)):
        lines.append(",".join(str(v) for v in [t, 0, 0, 0, 0, 0.2, 0, bx, 0, 0, bx, 0.1, 0.3]))
    (tmp_path / "traj.csv").write_text("\n".join(lines) + "\n")
    cfg = {
        "potential": {"kind": "laurent", "coefficients": {"1": 1.0, "2": 0.5}},
        "trajectory": {"kind": "sampled", "csv": "traj.csv"},
        "times": [0, 1, 4],
    }
    code, text = run(tmp_path, "evolve", write(tmp_path, "c.json", cfg))
    assert code == 0
    assert float(rows(text)[1][2]["concurrence"]) > 0


def test_malformed_json_writes_nothing(tmp_path, capsys):
    code, text = run(tmp_path, "evolve", write(tmp_path, "bad.json", "{not json"))
    assert code == 2 and text is None
    assert "malformed JSON" in capsys.readouterr().err


@pytest.mark.parametrize(
    "patch",
    [
        {"potential": {"kind": "power_law", "coupling": 1, "exponent": 0}},
        {"potential": {"kind": "laurent", "coefficients": {"0": 1}}},
        {"trajectory": {"kind": "collinear_static", "x": -1, "dx": 0.1}},
        {"times": []},
        {"times": [2.0], "trajectory": {"kind": "rotating_approach", "L": 1, "v": 1, "omega": 0, "x0": 0.1}},
        {"unexpected": 1},
    ],
)
def test_invalid_configs_exit_2(tmp_path, patch):
    code, text = run(tmp_path, "evolve", write(tmp_path, "c.json", {**COLLINEAR, **patch}))
    assert code == 2 and text is None


def test_missing_config_file(tmp_path):
    code, _ = run(tmp_path, "evolve", tmp_path / "absent.json")
    assert code == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    cfg = {**COLLINEAR, "tolerances": {"atol": 1e-16, "rtol": 1e-16, "max_subdivisions": 2}}
    cfg["trajectory"] = {"kind": "rotating_approach", "L": 1, "v": 0.05, "omega": 0.4, "x0": 0.1}
    cfg["times"] = [19.0]
    code, text = run(tmp_path, "evolve", write(tmp_path, "c.json", cfg))
    assert code == 3 and text is None
    assert "numerical failure" in capsys.readouterr().err


def test_constraint_symmetric_and_generic(tmp_path):
    code, text = run(tmp_path, "constraint", CONFIGS / "constraint_symmetric.json")
    assert code == 0
    report = json.loads(text)
    assert report["in_constraint_set"] is True and report["h"] == 0.0

    code, text = run(tmp_path, "constraint", CONFIGS / "constraint_generic.json")
    reports = json.loads(text)["reports"]
    assert [r["in_constraint_set"] for r in reports] == [False, False, False]
    assert abs(reports[0]["h"] - 1.9413706e-4) < 1e-11
    assert reports[0]["h"] == reports[1]["h"]


def test_constraint_constant_potential(tmp_path):
    cfg = {
        "potential": {"kind": "constant", "value": 5.0},
        "configuration": {"x": [0, 0, 0, 0.3, 0.1, 0, 1, 1, 0, 2, 0.5, 1]},
    }
    code, text = run(tmp_path, "constraint", write(tmp_path, "c.json", cfg))
    report = json.loads(text)
    assert code == 0 and report["in_constraint_set"] is True
    assert report["gradient_norm"] < 1e-10


def test_constraint_requires_exactly_one_configuration_key(tmp_path):
    cfg = {"potential": {"kind": "constant", "value": 1.0}}
    assert run(tmp_path, "constraint", write(tmp_path, "c.json", cfg))[0] == 2


def test_constraint_coincident_states_exit_2(tmp_path):
    cfg = {"potential": {"kind": "constant", "value": 1.0}, "configuration": {"x": [0] * 12}}
    assert run(tmp_path, "constraint", write(tmp_path, "c.json", cfg))[0] == 2


def test_sweep_reference_grid(tmp_path):
    cfg = json.loads((CONFIGS / "echo_sweep.json").read_text())
    cfg["v_grid"] = [0.05, 0.1]
    code, text = run(tmp_path, "sweep", write(tmp_path, "s.json", cfg))
    assert code == 0
    header, data = rows(text)
    assert header[-1] == "log10_phi2"
    assert len(data) == 5 * 2
    for r in data:
        if r["converged"] == "true":
            assert float(r["t_star"]) < float(r["t_bar"])


def test_sweep_single_point_and_unconverged(tmp_path):
    cfg = {"v_grid": [0.5], "omega_grid": [0.2]}
    code, text = run(tmp_path, "sweep", write(tmp_path, "s.json", cfg))
    _, data = rows(text)
    assert code == 0 and len(data) == 1
    assert data[0]["converged"] == "false"


def test_sweep_rejects_nonpositive_grid(tmp_path):
    cfg = {"v_grid": [0.0], "omega_grid": [0.2]}
    assert run(tmp_path, "sweep", write(tmp_path, "s.json", cfg))[0] == 2


def test_threads_from_environment(tmp_path, monkeypatch):
    cfg = write(tmp_path, "s.json", {"v_grid": [0.05, 0.1], "omega_grid": [0.2, 0.3]})
    code, serial = run(tmp_path, "sweep", cfg, "--threads", "1")
    monkeypatch.setenv("QHOLO_THREADS", "2")
    code2, pooled = run(tmp_path, "sweep", cfg)
    assert code == code2 == 0 and serial == pooled
    monkeypatch.setenv("QHOLO_THREADS", "many")
    assert run(tmp_path, "sweep", cfg)[0] == 2


def test_rerun_is_byte_identical(tmp_path):
    cfg = CONFIGS / "rotating_evolve.json"
    first = run(tmp_path, "evolve", cfg)[1]
    second = run(tmp_path, "evolve", cfg)[1]
    assert first == second


def test_output_key_in_config(tmp_path):
    target = tmp_path / "from_config.csv"
    cfg = write(tmp_path, "c.json", {**COLLINEAR, "output": str(target)})
    assert main(["evolve", "--config", str(cfg)]) == 0
    assert target.read_text().startswith("t,phi,concurrence\n")


def test_stdout_when_no_output(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", COLLINEAR)
    assert main(["evolve", "--config", str(cfg)]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "t,phi,concurrence"


def test_help_lists_commands_and_schema():
    result = subprocess.run(
        [sys.executable, "-m", "qholo", "--help"], capture_output=True, text=True, check=True
    )
    for name in ("evolve", "constraint", "sweep"):
        assert name in result.stdout
    assert str(schema_path()) in result.stdout
    assert schema_path().exists()


def test_shipped_configs_validate():
    expected = {
        "collinear_evolve.json": "evolve",
        "rotating_evolve.json": "evolve",
        "constraint_generic.json": "constraint",
        "constraint_symmetric.json": "constraint",
        "echo_sweep.json": "sweep",
    }
    for name, command in expected.items():
        validate(json.loads((CONFIGS / name).read_text()), command)
    with pytest.raises(ConfigError):
        validate(json.loads((CONFIGS / "echo_sweep.json").read_text()), "evolve")
