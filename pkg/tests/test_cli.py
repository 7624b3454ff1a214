import json
import os
import subprocess
import sys

import pytest

from pmech import cli


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_quantize_prints_the_delta_kernel(tmp_path, capsys):
    code, out, _ = run(["quantize", "q", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert "kernel   (1/2πi) δ(s)δ⁽¹⁾(x)δ(y)" in out
    summary = json.loads((tmp_path / "quantize_summary.json").read_text())
    assert summary["schema_version"] == 1 and summary["passed"]


def test_quantize_energy_and_zero(tmp_path, capsys):
    code, out, _ = run(["quantize", "(c1*q^2 + c2*p^2)/2", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert "−(1/8π²)(c1 δ(s)δ⁽²⁾(x)δ(y) + c2 δ(s)δ(x)δ⁽²⁾(y))" in out
    code, out, _ = run(["quantize", "q*p - p*q", "--out", str(tmp_path)], capsys)
    assert code == 0 and "kernel   0" in out


@pytest.mark.parametrize("argv", [
    ["quantize", "q +"],
    ["quantize", "q", "--h", "0"],
    ["quantize", "q", "--n", "48"],
    ["oscillator", "--n", "32", "--steps", "1"],
    ["correspondence", "--h-list", "0.1"],
    ["correspondence", "--h-list", "0.01", "0.1", "0.2"],
    ["frobnicate"],
])
def test_invalid_input_exits_2(argv, tmp_path, capsys):
    code, _, err = run(argv + ["--out", str(tmp_path)] if argv[0] != "frobnicate" else argv,
                       capsys)
    assert code == 2


def test_oscillator_outputs(tmp_path, capsys):
    code, _, _ = run(["oscillator", "--n", "32", "--T", "1.0", "--steps", "60",
                      "--gnuplot", "--out", str(tmp_path)], capsys)
    assert code == 0
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header.startswith("t,expect_p,expect_heisenberg,expect_hamilton")
    assert "plot" in (tmp_path / "trajectory.gp").read_text()
    summary = json.loads((tmp_path / "oscillator_summary.json").read_text())
    assert summary["passed"] and summary["command"] == "oscillator"


def test_correspondence_and_determinism(tmp_path, capsys):
    argv = ["correspondence", "--n", "32", "--out", str(tmp_path)]
    assert run(argv, capsys)[0] == 0
    first = {p: (tmp_path / p).read_bytes() for p in os.listdir(tmp_path)}
    assert run(argv, capsys)[0] == 0
    second = {p: (tmp_path / p).read_bytes() for p in os.listdir(tmp_path)}
    assert first == second
    rows = (tmp_path / "correspondence.csv").read_text().splitlines()
    assert rows[0] == "h,bracket_l2,abs_error,rel_error" and len(rows) == 4


def test_identical_kernels_and_nan_to_null(tmp_path, capsys):
    code, out, _ = run(["correspondence", "--identical", "--out", str(tmp_path)], capsys)
    assert code == 0 and "PASS" in out
    summary = json.loads((tmp_path / "correspondence_summary.json").read_text())
    assert summary["result"]["slope"] is None


def test_toml_config(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text('experiment = "correspondence"\n[grid]\nN = 32\nh = 1.0\n'
                   '[correspondence]\nh = [0.2, 0.1, 0.05]\n[tolerance]\nslope = 0.3\n'
                   f'[output]\ndir = "{tmp_path / "o"}"\n')
    code, out, _ = run(["correspondence", "--config", str(cfg)], capsys)
    assert code == 0
    summary = json.loads((tmp_path / "o" / "correspondence_summary.json").read_text())
    assert summary["config"]["h_list"] == [0.2, 0.1, 0.05]
    assert summary["config"]["tolerances"]["slope"] == 0.3
    bad = tmp_path / "bad.toml"
    bad.write_text("[grid]\nwidth = 3\n")
    assert run(["correspondence", "--config", str(bad)], capsys)[0] == 2
    bad.write_text("[tolerance]\nnonsense = 1.0\n")
    assert run(["correspondence", "--config", str(bad)], capsys)[0] == 2
    assert run(["correspondence", "--config", str(tmp_path / "missing.toml")], capsys)[0] == 2


def test_failed_check_exits_1(tmp_path, capsys):
    code, out, _ = run(["correspondence", "--n", "32", "--tol", "1e-15",
                        "--out", str(tmp_path)], capsys)
    assert code == 1 and "FAIL" in out


def test_verify_suite(tmp_path, capsys):
    code, out, _ = run(["verify", "--out", str(tmp_path)], capsys)
    summary = json.loads((tmp_path / "verify_summary.json").read_text())
    assert code == 0, summary["result"]["failed"]
    names = [c["name"] for c in summary["result"]["checks"]]
    assert "units.violations" in names and len(names) == 21


def test_thread_limit():
    env = {"PMECH_THREADS": "2"}
    assert cli.limit_threads(env) == 2
    assert all(env[v] == "2" for v in cli.THREAD_VARS)
    assert cli.limit_threads({}) is None
    with pytest.raises(cli.ConfigError):
        cli.limit_threads({"PMECH_THREADS": "abc"})


def test_console_entry_point(tmp_path):
    env = dict(os.environ, PMECH_THREADS="1")
    r = subprocess.run([sys.executable, "-m", "pmech.cli", "quantize", "p",
                        "--out", str(tmp_path)], capture_output=True, text=True, env=env)
    assert r.returncode == 0, r.stderr
    assert "δ(s)δ(x)δ⁽¹⁾(y)" in r.stdout
