import json
import subprocess
import sys

import pytest

from dirac_index.cli import main, parse_named, parse_t_grid
from dirac_index.errors import ConfigError

SMALL_QUAD = ["--sphere-n", "12", "--radial-n", "12", "--r-max", "100"]

SPHERE8_FIELD = {
    "d": 3,
    "m": 2,
    "terms": [
        {"matrix": [[1, 0], [0, -1]], "monomial": [2, 0, 0]},
        {"matrix": [[1, 0], [0, -1]], "monomial": [0, 2, 0]},
        {"matrix": [[1, 0], [0, -1]], "monomial": [0, 0, 2]},
        {"matrix": [[-64, 0], [0, 64]]},
    ],
}


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if code in (0, 3) and out.strip() else None)


def test_parse_named():
    assert parse_named("hedgehog:scale=2,shift=[1,0,0]") == ("hedgehog", {"scale": 2, "shift": [1, 0, 0]})
    assert parse_named("constant") == ("constant", {})
    with pytest.raises(ConfigError):
        parse_named("hedgehog:scale")


def test_parse_t_grid():
    assert parse_t_grid("1:32:6") == pytest.approx([1, 2, 4, 8, 16, 32])
    for bad in ("1:2", "0:1:3", "2:1:3", "a:b:c"):
        with pytest.raises(ConfigError):
            parse_t_grid(bad)


def test_clifford_info(capsys):
    code, rep = run_cli(capsys, "clifford-info", "--d", "3")
    assert code == 0
    assert rep["r"] == 2
    assert rep["kappa_c"] == {"real": -2.0, "imag": 0.0}
    assert rep["max_residual"] <= 1e-14


def test_heat_trace_constant_vanishes(capsys, tmp_path):
    code, rep = run_cli(capsys, "heat-trace", "--field", "constant", "--t", "1,2", *SMALL_QUAD, "--out", str(tmp_path))
    assert code == 0
    assert all(abs(r["value"]) <= 1e-12 for r in rep["results"])
    assert (tmp_path / "manifest.json").exists() and (tmp_path / "heat-trace.csv").exists()


def test_callias_index_integer(capsys):
    code, rep = run_cli(capsys, "callias-index", "--field", "hedgehog")
    assert code == 0
    assert rep["nearest_integer"] == -1 and rep["integer_distance"] <= 1e-4


def test_evolve_and_audit(capsys):
    code, rep = run_cli(capsys, "evolve", "--generator", "bump", "--from", "-2", "--to", "2")
    assert code == 0 and rep["unitarity_defect"] <= 1e-12 and rep["cocycle_residual"] <= 1e-9
    code, rep = run_cli(capsys, "audit", "--field", "hedgehog")
    assert code == 0 and rep["passed"]


def test_oracle_1d(capsys):
    code, rep = run_cli(capsys, "oracle-1d", "--m", "1", "--L", "20", "--N", "1000", "--levels", "1000,2000")
    assert code == 0
    assert rep["refinement"][1]["ratio"] == pytest.approx(4.0, abs=0.4)


def test_ds_witten_closed_form_only(capsys):
    code, rep = run_cli(capsys, "ds-witten", "--method", "closed-form", "--sphere-n", "6", "--radial-n", "10")
    assert code == 0 and "closed_form" in rep and "ds_witten" not in rep


@pytest.mark.parametrize(
    "argv",
    [
        ["callias-index", "--field", "nosuchfield"],
        ["heat-trace", "--field", "scalar:f=2"],
        ["heat-trace", "--t-grid", "1:2"],
        ["clifford-info", "--d", "banana"],
        ["oracle-1d", "--m", "3"],
        ["oracle-1d", "--N", "100"],
        ["oracle-1d", "--z", "0"],
        ["evolve", "--generator", "wobble"],
        [],
    ],
)
def test_usage_errors_exit_one(capsys, argv):
    assert main(argv) == 1


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["clifford-info", "--config", str(cfg)]) == 1


def test_config_file_applies(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"d": 5}))
    code, rep = run_cli(capsys, "clifford-info", "--config", str(cfg))
    assert code == 0 and rep["r"] == 4


def test_gap_violation_exit_two(tmp_path):
    spec = tmp_path / "field.json"
    spec.write_text(json.dumps(SPHERE8_FIELD))
    assert main(["callias-index", "--field", f"user:spec={spec}", "--radii", "4,8,16"]) == 2


def test_strict_non_convergence_exit_three(capsys):
    argv = ["heat-trace", "--field", "hedgehog", "--t-grid", "0.1:0.4:5", *SMALL_QUAD]
    assert main(argv) == 0
    assert main(argv + ["--strict"]) == 3


def test_manifest_rerun_is_bitwise(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["callias-index", "--sphere-n", "12", "--reproducible", "--out", str(a)]) == 0
    assert main(["--manifest", str(a / "manifest.json"), "--out", str(b)]) == 0
    for name in ("manifest.json", "callias-index.json", "callias-index.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_bad_manifest(tmp_path):
    p = tmp_path / "m.json"
    p.write_text("{}")
    assert main(["--manifest", str(p)]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dirac_index", "clifford-info", "--d", "1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["kappa_c"] == {"real": 0.0, "imag": -1.0}
