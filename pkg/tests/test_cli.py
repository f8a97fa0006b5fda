import csv
import io
import json
import subprocess
import sys

import pytest

from pfl import cli
from pfl.shifts import jensen_lower_bound
from pfl.units import Params

SMALL = ["--grid-n", "400", "--grid-rmax", "60", "--no-extrapolate"]


def _run(argv):
    cfg = cli.parse_config(argv)
    out, err = io.StringIO(), io.StringIO()
    assert cli.run(cfg, out, err) == 0
    return out.getvalue(), err.getvalue()


def test_mass_json():
    text, err = _run(["mass", "--m", "1", "--alpha", "0.00729927", "--Lambda", "100"])
    doc = json.loads(text)
    assert doc["m0_mc2"] < 1
    assert doc["roundtrip_residual"] < 1e-12
    assert "first order in alpha" in err


def test_s_function_zero():
    doc = json.loads(_run(["s-function", "--e", "0"])[0])
    assert doc["S"] == 0.0


def test_deterministic_output(tmp_path):
    argv = ["f-function", "--e", "0,0.5,3", "--Lambda", "10"]
    a = _run(argv)[0]
    b = _run(argv)[0]
    assert a == b
    out = tmp_path / "x.json"
    proc = [sys.executable, "-m", "pfl.cli", *argv, "--out", str(out)]
    subprocess.run(proc, check=True, capture_output=True)
    first = out.read_bytes()
    subprocess.run(proc, check=True, capture_output=True)
    assert out.read_bytes() == first
    assert first.decode() == a


def test_csv_units_and_precision():
    text = _run(["s-function", "--e", "1e-3,2", "--format", "csv"])[0]
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 2 and float(rows[0]["e"]) == 1e-3
    text = _run(["self-energy", "--format", "csv"])[0]
    header = text.splitlines()[0].split(",")
    assert "self_energy_MHz" in header and "self_energy_mc2" in header


def test_config_precedence(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[params]\nalpha = 0.01\nLambda = 5\n[output]\nformat = csv\n")
    cfg = cli.parse_config(["self-energy", "--config", str(ini), "--Lambda", "7"])
    assert cfg.params.alpha == 0.01
    assert cfg.params.Lambda == 7.0
    assert cfg.format == "csv"
    default = cli.parse_config(["self-energy"])
    assert default.params.alpha == pytest.approx(1 / 137)


@pytest.mark.parametrize(
    "body, where",
    [
        ("[params]\nalpha = 0.01\nbogus = 3\n", ":3:"),
        ("[params]\nalpha = abc\n", ":2:"),
        ("[run]\nt_mode = exact\n", "t_mode"),
        ("[params\nalpha=1\n", "run.ini"),
    ],
)
def test_config_errors(tmp_path, capsys, body, where):
    ini = tmp_path / "run.ini"
    ini.write_text(body)
    assert cli.main(["mass", "--config", str(ini)]) == 2
    assert where in capsys.readouterr().err


def test_module_error_exit(capsys):
    assert cli.main(["mass", "--alpha", "-1"]) != 0
    assert capsys.readouterr().err.startswith("pfl")


def test_binding_report_fields():
    text, err = _run(["binding", "--beta", "0.00729927", "--Z", "1", *SMALL])
    doc = json.loads(text)
    p = Params(beta=0.00729927, Z=1.0)
    assert doc["in_MHz"]["jensen_shift"] == pytest.approx(jensen_lower_bound(p).shift_MHz, rel=1e-15)
    for key in ("coulomb_term", "s_term", "t_term", "total", "bethe_approx", "convergence_error"):
        assert key in doc
    assert "Jensen shift" in err and "convergence error" in err


def test_level_shift_and_sweep_csv():
    text = _run(["level-shift", "--n", "2", "--l", "1", "--beta", "0.05", "--format", "csv", *SMALL])[0]
    row = next(csv.DictReader(io.StringIO(text)))
    assert row["n"] == "2" and row["l"] == "1" and "s_term_MHz" in row
    text = _run(["sweep", "--sweep-betaZ", "0.05,0.1", "--sweep-alpha", "0.005,0.01",
                 "--format", "csv", *SMALL])[0]
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 4
    assert {float(r["alpha"]) for r in rows} == {0.005, 0.01}
