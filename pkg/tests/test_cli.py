import csv
import io
import json
import math

import jsonschema
import numpy as np
import pytest
from hypothesis import given, strategies as st

from lzgate import runners
from lzgate.cli import main
from lzgate.config import MODES, SWEEPABLE_MODES, build_config, default_config, load_schema, make_rng, parse_set, validate_config
from lzgate.errors import ConfigError, StiffnessFailure
from lzgate.sweep import format_cell, sweep, write_csv

REPORT = jsonschema.Draft202012Validator(load_schema("report-v1.json"))
CONFIG = jsonschema.Draft202012Validator(load_schema("config-v1.json"))


def run_cli(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *args):
    code, out, err = run_cli(capsys, *args, "--format", "json")
    assert code == 0, err
    doc = json.loads(out)
    REPORT.validate(doc)
    CONFIG.validate(doc["config"])
    return doc


def read_csv(text):
    return list(csv.reader(io.StringIO(text)))


# -- plain modes ------------------------------------------------------------------


def test_lz_verify_unit_exponent(capsys):
    doc = run_json(capsys, "lz-verify", "--tau", "1", "--omega", "1", "--u", "3.14159")
    (row,) = doc["result"]["rows"]
    assert row["p_analytic"] == pytest.approx(0.36788, abs=5e-6)
    assert 0.0 <= row["p_numeric"] <= 1.0


def test_lz_verify_table_has_analytic_column(capsys):
    code, out, _ = run_cli(capsys, "lz-verify", "--tau", "1", "--omega", "1", "--u", "3.14159", "--format", "table")
    assert code == 0
    header, row = out.strip().splitlines()
    assert "p_analytic" in header.split()
    assert "0.367879" in row.split()


def test_design_check_reference_table(capsys):
    code, out, _ = run_cli(capsys, "design-check", "--format", "table")
    assert code == 0
    assert "EJ/T" in out and "33.33" in out
    assert "7.3024e-04" in out


def test_design_check_json_with_gate_mapping(capsys):
    doc = run_json(capsys, "design-check", "--e-ref", "1.0")
    result = doc["result"]
    assert result["passed"] is True
    assert result["gate_params"]["omega"] == pytest.approx(0.5)
    assert [r["ratio"] for r in result["rules"]][:3] == pytest.approx([100 / 3, 3.0, 20 / 3])


def test_design_check_zero_temperature_serialises_infinity(capsys):
    doc = run_json(capsys, "design-check", "--set", "device_params.T=0")
    assert doc["result"]["rules"][0]["ratio"] == "inf"


def test_measure_phase(capsys):
    doc = run_json(capsys, "measure-phase", "--p1", "0.3", "--phi", "1.1", "--cases", "200", "--seed", "5")
    r = doc["result"]
    assert r["q1"] == pytest.approx(0.5 - math.sqrt(0.21) * math.sin(1.1), abs=1e-12)
    assert r["random_max_abs_error"] < 1e-9


def test_simulate_reference_gate(capsys, tmp_path):
    out = tmp_path / "report.json"
    code, _, err = run_cli(capsys, "simulate", "--out", str(out))
    assert code == 0, err
    doc = json.loads(out.read_text())
    REPORT.validate(doc)
    report = doc["result"]["report"]
    assert report["flip_error_10"] < 1e-4
    assert report["flip_error_11"] < 1e-4
    U = np.array(doc["result"]["unitary"]["real"]) + 1j * np.array(doc["result"]["unitary"]["imag"])
    assert np.max(np.abs(U.conj().T @ U - np.eye(4))) < 1e-9


# -- configuration ----------------------------------------------------------------


@pytest.mark.parametrize("mode", [m for m in MODES if m != "sweep"])
def test_defaults_validate(mode):
    cfg = build_config(mode)
    CONFIG.validate(cfg.data)
    assert cfg.mode == mode


def test_config_file_and_set_precedence(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"lz": {"omega": 0.5, "u": 5.0, "tau": [1.0, 2.0]}}))
    cfg = build_config("lz-verify", path, [parse_set("lz.omega=0.25")])
    assert cfg.data["lz"]["omega"] == 0.25
    assert cfg.data["lz"]["tau"] == [1.0, 2.0]
    assert "exponent" not in cfg.data["lz"]


def test_malformed_json_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "tol": 1e-6,\n}\n')
    code, _, err = run_cli(capsys, "simulate", "--config", str(path))
    assert code == 2
    assert "line 3" in err and "ConfigError" in err


def test_missing_config_file(capsys, tmp_path):
    code, _, err = run_cli(capsys, "simulate", "--config", str(tmp_path / "nope.json"))
    assert code == 2 and "cannot read config" in err


@pytest.mark.parametrize(
    "args, fragment",
    [
        (["simulate", "--tol", "0.1"], "tol"),
        (["simulate", "--set", "cn_params.gain=1"], "cn_params"),
        (["simulate", "--set", "device_params.N=20"], "required for simulate"),
        (["simulate", "--set", "nonsense"], "key=value"),
        (["sweep"], "sweep.mode"),
        (["sweep", "--sweep-mode", "lz-verify", "--param", "workers", "--values", "[1, 2]"], "cannot sweep"),
        (["sweep", "--sweep-mode", "lz-verify", "--param", "lz.tau", "--values", "[]"], "sweep"),
    ],
)
def test_configuration_errors_exit_2(capsys, args, fragment):
    code, out, err = run_cli(capsys, *args)
    assert code == 2
    assert out == ""
    assert err.startswith("lzgate: error: ")
    assert fragment in err


def test_regime_violation_is_named(capsys):
    code, _, err = run_cli(capsys, "simulate", "--set", "cn_params.eta=0.1")
    assert code == 2
    assert "RegimeViolation" in err and "eps+eta-u" in err


def test_numerical_failure_exits_3(capsys, monkeypatch):
    def stiff(*args, **kwargs):
        raise StiffnessFailure("step budget exceeded")

    monkeypatch.setattr(runners, "lz_numeric", stiff)
    code, _, err = run_cli(capsys, "lz-verify", "--tau", "1", "--omega", "1", "--u", "3")
    assert code == 3
    assert "StiffnessFailure" in err


def test_rng_is_philox_and_reproducible():
    a, b = make_rng(42), make_rng(42)
    assert isinstance(a.bit_generator, np.random.Philox)
    assert np.array_equal(a.random(8), b.random(8))
    assert not np.array_equal(make_rng(43).random(8), make_rng(42).random(8))


def test_validate_requires_sweep_section():
    d = default_config("sweep", "lz-verify")
    with pytest.raises(ConfigError):
        validate_config(d)


# -- sweeps -----------------------------------------------------------------------


def sweep_csv(capsys, *args):
    code, out, err = run_cli(capsys, "sweep", *args)
    assert code == 0, err
    return out


def test_exponent_grid_gives_decreasing_probabilities(capsys):
    out = sweep_csv(capsys, "--sweep-mode", "lz-verify", "--param", "lz.exponent", "--values", "[0.5, 1, 2, 4]", "--set", "lz.omega=0.2", "--set", "lz.u=2")
    rows = read_csv(out)
    header = rows[0]
    assert header[0] == "lz.exponent" and header[-1] == "error"
    analytic = [float(r[header.index("p_analytic")]) for r in rows[1:]]
    numeric = [float(r[header.index("p_numeric")]) for r in rows[1:]]
    assert analytic == sorted(analytic, reverse=True)
    assert numeric == sorted(numeric, reverse=True)


def test_tau_sweep_eleven_rows_deterministic(capsys):
    args = ("--sweep-mode", "lz-verify", "--param", "lz.tau", "--grid", "1", "11", "11", "--set", "lz.omega=0.5", "--set", "lz.u=5")
    first = sweep_csv(capsys, *args)
    second = sweep_csv(capsys, *args)
    assert first == second
    assert len(read_csv(first)) == 12
    assert "\r" not in first


def test_single_point_sweep_equals_plain_run(capsys):
    plain = run_cli(capsys, "measure-phase", "--p1", "0.4", "--phi", "0.7", "--format", "csv")[1]
    swept = sweep_csv(capsys, "--sweep-mode", "measure-phase", "--param", "phase.p1", "--values", "[0.4]", "--set", "phase.phi=0.7")
    p_rows, s_rows = read_csv(plain), read_csv(swept)
    assert s_rows[0][1:-1] == p_rows[0]
    assert s_rows[1][1:-1] == p_rows[1]
    assert s_rows[1][-1] == ""


def test_failed_point_is_recorded_not_dropped(capsys):
    code, out, err = run_cli(capsys, "sweep", "--sweep-mode", "lz-verify", "--param", "lz.eps_offset", "--values", "[0.0, 10.0]", "--set", "lz.tau=2", "--set", "lz.omega=0.5", "--set", "lz.u=5")
    assert code == 0
    assert "1 of 2 sweep points failed" in err
    rows = read_csv(out)
    assert len(rows) == 3
    assert all(len(r) == len(rows[0]) for r in rows)
    assert rows[1][-1] == ""
    assert rows[2][-1].startswith("InvalidArgument:")
    assert rows[2][rows[0].index("p_numeric")] == "nan"


def test_two_axis_grid(capsys, tmp_path):
    path = tmp_path / "grid.json"
    path.write_text(
        json.dumps(
            {
                "sweep": {
                    "mode": "measure-phase",
                    "axes": [{"parameter": "phase.p1", "values": [0.2, 0.8]}, {"parameter": "phase.phi", "grid": {"start": 0, "stop": 1, "count": 3}}],
                },
                "phase": {"random_cases": 0},
            }
        )
    )
    rows = read_csv(sweep_csv(capsys, "--config", str(path)))
    assert rows[0][:2] == ["phase.p1", "phase.phi"]
    assert [r[:2] for r in rows[1:]] == [[p, q] for p in ("0.20000000000000001", "0.80000000000000004") for q in ("0", "0.5", "1")]


def test_sweep_json_output_validates(capsys):
    doc = run_json(capsys, "sweep", "--sweep-mode", "design-check", "--param", "device_params.N", "--values", "[10, 40]")
    result = doc["result"]
    assert len(result["rows"]) == 2
    assert result["columns"][-1] == "error"


def test_workers_from_environment(capsys, monkeypatch):
    args = ("--sweep-mode", "measure-phase", "--param", "phase.phi", "--grid", "0", "3", "6")
    serial = sweep_csv(capsys, *args)
    monkeypatch.setenv("LZGATE_WORKERS", "3")
    assert sweep_csv(capsys, *args) == serial
    monkeypatch.setenv("LZGATE_WORKERS", "zero")
    assert run_cli(capsys, "sweep", *args)[0] == 2


def test_sweep_function_row_count_matches_grid():
    cfg = build_config("sweep", overrides=[("sweep", {"mode": "design-check", "parameter": "margin", "values": [1, 3, 10]})])
    result = sweep(cfg, workers=1)
    assert len(result.rows) == 3
    passed = [r[result.columns.index("passed")] for r in result.rows]
    assert passed == [True, True, False]


@pytest.mark.parametrize("mode", SWEEPABLE_MODES)
def test_csv_header_is_fixed_per_mode(mode):
    assert runners.MODE_COLUMNS[mode]
    assert len(set(runners.MODE_COLUMNS[mode])) == len(runners.MODE_COLUMNS[mode])


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_cells_round_trip(x):
    assert float(format_cell(x)) == x


def test_csv_quoting():
    text = write_csv(["a", "error"], [[1.5, 'bad, "quoted" value'], [True, ""]])
    assert text == 'a,error\n1.5,"bad, ""quoted"" value"\ntrue,\n'


def test_both_parameter_sections_rejected(tmp_path, capsys):
    path = tmp_path / "both.json"
    path.write_text(json.dumps({"cn_params": {"eps": 0.5, "u": 1, "eta": 1, "omega": 0.05, "tau": 2000, "ramp": 200}, "device_params": {"preset": "reference"}}))
    code, _, err = run_cli(capsys, "simulate", "--config", str(path))
    assert code == 2 and "exactly one" in err


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "lzgate", "lz-verify", "--tau", "1", "--omega", "1", "--u", "3.14159", "--format", "csv"], capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("omega,u,tau,exponent,p_analytic")


def test_tau_and_exponent_together_rejected(tmp_path, capsys):
    path = tmp_path / "lz.json"
    path.write_text(json.dumps({"lz": {"omega": 1.0, "u": 3.0, "tau": 1.0, "exponent": 1.0}}))
    code, _, err = run_cli(capsys, "lz-verify", "--config", str(path))
    assert code == 2 and "exactly one of 'tau' or 'exponent'" in err
