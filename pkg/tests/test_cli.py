from __future__ import annotations

import csv
import io
import json
import math
import subprocess
import sys
from fractions import Fraction

import pytest
from numpy.testing import assert_allclose

from heatladder import sphere_kernel_spectral, sphere_odd_kernel
from heatladder.cli import GridSpec, RunConfig, main, run


def call(args, capsys):
    status = main(args)
    out, err = capsys.readouterr()
    return status, out, err


def test_eval_example(capsys):
    status, out, _ = call(["eval", "--space", "sphere", "--dim", "3", "--t", "0.5", "--r", "1.0"], capsys)
    assert status == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    assert out.splitlines()[0] == "t,r,value,method"
    assert float(rows[0]["value"]) == sphere_odd_kernel(1, 0.5, 1.0)
    assert rows[0]["method"] == "closed_form"


def test_coeffs_example(capsys):
    status, out, _ = call(["coeffs", "--diag", "hyperbolic", "--m", "2"], capsys)
    assert status == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert out.splitlines()[0] == "m,k,numerator,denominator,sqrtpi"
    row = [r for r in rows if r["k"] == "1"][0]
    assert Fraction(int(row["numerator"]), int(row["denominator"])) == Fraction(2, 3)


def test_coeffs_trace_and_cmk(capsys):
    status, out, _ = call(["coeffs", "--trace", "--m", "1", "--K", "2"], capsys)
    assert status == 0
    assert out.splitlines()[1:] == ["1,0,1,4,1", "1,1,1,4,1", "1,2,1,8,1"]
    status, out, _ = call(["coeffs", "--cmk", "--m", "4"], capsys)
    assert out.splitlines()[1:] == ["4,0,1,1,0", "4,1,14,1,0", "4,2,49,1,0", "4,3,36,1,0"]


@pytest.mark.parametrize("space,dim,method", [
    ("sphere", 1, "closed_form"), ("sphere", 2, "spectral"), ("sphere", 5, "closed_form"),
    ("hyperbolic", 3, "closed_form"), ("hyperbolic", 2, "abel"), ("euclid", 4, "closed_form"),
])
def test_routing(space, dim, method, capsys):
    status, out, _ = call(["eval", "--space", space, "--dim", str(dim), "--t", "0.5", "--r", "0.5", "--format", "json"], capsys)
    assert status == 0
    assert json.loads(out)["rows"][0]["method"] == method


def test_even_sphere_small_time_uses_main_term(capsys):
    status, out, _ = call(["eval", "--space", "sphere", "--dim", "2", "--t", "1e-5", "--r", "0.001"], capsys)
    assert status == 0
    value = float(out.splitlines()[1].split(",")[2])
    # S^2 small-time diagonal expansion (4 pi t)^{-1} (1 + t/3)
    assert_allclose(value, 1 / (4 * math.pi * 1e-5) * math.exp(-1e-6 / 4e-5) * (1 + 1e-5 / 3), rtol=1e-5)


def test_grid_and_output_file(tmp_path, capsys):
    path = tmp_path / "k.csv"
    status, out, _ = call(["eval", "--space", "sphere", "--dim", "2", "--t-grid", "0.2", "1.0", "3",
                           "--r-grid", "0", "3.141592653589793", "4", "--out", str(path)], capsys)
    assert status == 0 and out == ""
    text = path.read_bytes().decode()
    assert "\r" not in text
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 12
    for row in rows:
        assert_allclose(float(row["value"]), sphere_kernel_spectral(2, float(row["t"]), float(row["r"])), rtol=1e-13)


def test_deterministic_output(capsys):
    args = ["eval", "--space", "hyperbolic", "--dim", "2", "--t", "0.5", "1.0", "--r", "0.3", "1.0"]
    _, first, _ = call(args, capsys)
    _, second, _ = call(args, capsys)
    assert first == second


def test_exit_codes(capsys):
    status, _, err = call(["eval", "--bogus"], capsys)
    assert status == 2 and "usage" in err
    status, _, err = call(["eval", "--space", "sphere", "--dim", "3", "--t", "0.5", "--r", "4.0"], capsys)
    assert status == 2 and "validation error" in err
    status, _, _ = call(["verify", "--suite", "trace", "--tol", "1e-20"], capsys)
    assert status == 2
    status, _, err = call(["volterra", "--steps", "8", "--r-nodes", "4"], capsys)
    assert status == 3 and "accuracy" in err


@pytest.mark.parametrize("control", ["dropped_exponential", "perturbed_prefactor", "wrong_sign"])
def test_verify_controls_exit_4(control, capsys):
    status, out, _ = call(["verify", "--suite", "closed_form", "--control", control], capsys)
    assert status == 4
    assert ",fail" in out


def test_verify_json(capsys):
    status, out, _ = call(["verify", "--suite", "trace", "--format", "json"], capsys)
    doc = json.loads(out)
    assert status == 0 and doc["passed"] is True
    assert all(r["status"] == "pass" for r in doc["rows"])


def test_run_config_validation():
    cfg = RunConfig("eval", tol=1.0)
    assert run(cfg, io.StringIO(), io.StringIO()) == 2
    with pytest.raises(Exception):
        GridSpec(1.0, 2.0, 0)


def test_console_module_entry():
    proc = subprocess.run([sys.executable, "-m", "heatladder", "coeffs", "--diag", "sphere", "--m", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[2] == "2,1,-2,3,0"
