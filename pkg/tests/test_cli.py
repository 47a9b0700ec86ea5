import json
import math
import subprocess
import sys

import pytest

from convomeasure.cli import grid_spec, main, resolve, vector

SQRT3_PI = math.pi / math.sqrt(3)


def run(capsys, *argv):
    status = main(list(argv))
    out = capsys.readouterr()
    return status, out.out, out.err


def test_parsers():
    assert vector("1.5,0.0") == [1.5, 0.0]
    assert grid_spec("-2:2:9") == [-2.0, 2.0, 9]


def test_closed_form_verification(capsys):
    status, out, _ = run(capsys, "verify-closed-form", "--dim", "1", "--n", "3")
    lines = out.splitlines()
    assert status == 0
    assert lines[0].split(",")[4] == "closed_form"
    assert len(lines) == 51
    assert all(float(l.split(",")[5]) == pytest.approx(SQRT3_PI) for l in lines[1:])


def test_density_outside_support(capsys):
    status, out, _ = run(capsys, "density", "--dim", "1", "--n", "3", "--perturbation",
                         "quartic", "--xi", "0", "--tau", "-1")
    payload = json.loads(out)
    assert status == 0
    assert payload["value"] == 0 and payload["regime"] == "outside-support"


def test_verify_comparison(capsys):
    status, out, err = run(capsys, "verify-comparison", "--dim", "1", "--n", "3",
                           "--perturbation", "quartic", "--xi-grid", "-2:2:9",
                           "--offsets", "0.1,1,10")
    assert status == 0
    assert "violations=0" in err
    margins = [float(l.split(",")[5]) for l in out.splitlines()[1:]]
    assert len(margins) == 27 and min(margins) > 0


def test_output_is_byte_stable(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"perturbation": {"name": "quartic", "params": []}, "dim": 2,
                               "n": 3, "xi": "0.5,0.1", "tau": 2.0, "seed": 11,
                               "nodes": 4000}))
    outs = []
    for k in range(2):
        path = tmp_path / f"out{k}.json"
        assert main(["density", "--config", str(cfg), "--output", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dim": 2, "n": 2, "tau": 5.0}))
    config = resolve(["density", "--config", str(cfg), "--tau", "3", "--xi", "1,1"])
    assert config["dim"] == 2 and config["tau"] == 3.0 and config["xi"] == [1.0, 1.0]


def test_dry_run(capsys):
    status, out, _ = run(capsys, "oracle", "--dry-run", "--samples", "10")
    resolved = json.loads(out)
    assert status == 0 and resolved["samples"] == 10 and resolved["seed"] == 0


@pytest.mark.parametrize("argv", [
    ["density", "--perturbation", "cubic"],
    ["density", "--dim", "2", "--xi", "1"],
    ["density", "--no-such-flag"],
    ["verify-comparison", "--xi-grid", "0:1"],
    ["density", "--config", "/nonexistent.json"],
])
def test_usage_errors(capsys, argv):
    assert main(argv) == 2


def test_unwritable_output(capsys, tmp_path):
    target = tmp_path / "missing" / "out.json"
    assert main(["density", "--output", str(target)]) == 2


def test_boundary_subcommand(capsys):
    status, out, _ = run(capsys, "boundary", "--dim", "1", "--n", "3", "--perturbation",
                         "quartic", "--xi", "0")
    assert status == 0 and json.loads(out)["value"] == pytest.approx(SQRT3_PI)
    status, out, _ = run(capsys, "boundary", "--n", "2", "--perturbation", "quartic",
                         "--tau", "0.01")
    payload = json.loads(out)
    assert payload["value"] == "inf" and payload["asymptotic"] > 0


def test_oracle_root_sum(capsys):
    status, out, _ = run(capsys, "oracle", "--n", "2", "--method", "root-sum", "--xi", "0",
                         "--tau", "1")
    assert status == 0 and json.loads(out)["value"] == pytest.approx(1 / math.sqrt(2))


def test_extension_sweep(capsys):
    status, out, _ = run(capsys, "extension-sweep", "--perturbation", "quartic",
                         "--a-list", "1,2")
    lines = out.splitlines()
    assert status == 0
    assert lines[0] == "a,center,q_value,q_err,gap,flag" and len(lines) == 3


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "convomeasure.cli", "density", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "(default: 'zero')" in res.stdout
