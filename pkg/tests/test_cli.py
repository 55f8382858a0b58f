import json
import subprocess
import sys

import pytest
import yaml

from hardycheck.cli import main, validate_config, ConfigError
from hardycheck.report import SCHEMA_VERSION, ReportError, dumps, emit_report, to_jsonable

THM32_ARGS = ["--ineq", "thm32", "--p", "0.49673", "--q", "0.75506", "--a", "0.17620",
              "--f", "1.33302*min(x,2.56845)", "--g", "0.957952*x^1.2461"]


def _json(path):
    return json.loads(path.read_text())


# exit codes -------------------------------------------------------------

def test_exit0_verify_hardy(capsys):
    assert main(["verify", "--ineq", "hardy", "--p", "2", "--f", "exp(-x)"]) == 0
    out = capsys.readouterr().out
    assert "lhs=1.386294" in out and "HOLDS" in out and "rhs=2 " in out


def test_exit1_verify_fails(capsys):
    assert main(["verify", *THM32_ARGS]) == 1
    assert "FAILS" in capsys.readouterr().out


def test_exit2_vacuous(capsys):
    assert main(["verify", "--ineq", "hardy", "--p", "2", "--f", "1"]) == 2
    assert "VACUOUS" in capsys.readouterr().out


def test_exit2_empty_suite(tmp_path):
    cfg = tmp_path / "empty.yaml"
    cfg.write_text("schema_version: 1\nruns: []\n")
    out = tmp_path / "r.json"
    assert main(["suite", "--config", str(cfg), "--out", str(out)]) == 2
    rep = _json(out)
    assert rep["runs"] == [] and rep["status"] == "inconclusive-empty"
    assert rep["schema_version"] == SCHEMA_VERSION


@pytest.mark.parametrize("argv, needle", [
    (["verify", "--ineq", "thm31", "--p", "2", "--a", "1.5", "--q", "1", "--f", "exp(-x)",
      "--g", "2*x"], "constraint 0<a<1"),
    (["verify", "--ineq", "nope", "--p", "2", "--f", "x"], "entry"),
    (["verify", "--ineq", "hardy", "--p", "2", "--f", "exp(-x"], "slots.f"),
    (["verify", "--ineq", "hardy", "--p", "2", "--f=-1-x"], "non-negative"),
    (["verify", "--ineq", "hardy", "--f", "exp(-x)"], "parameter p"),
    (["falsify", "--ineq", "hardy"], "--seed"),
    (["optimize", "--ineq", "hardy", "--p", "2", "--family", "constant"], "--seed"),
    (["lemmas"], "--seed"),
    (["falsify", "--ineq", "hardy", "--seed", "1", "--family", "f=unknown-fam"], "family"),
    (["sharpness", "--p", "2", "--tmin", "10", "--tmax", "5"], "tmax"),
    (["frobnicate"], "invalid choice"),
])
def test_exit3_usage(argv, needle, capsys):
    assert main(argv) == 3
    assert needle in capsys.readouterr().err


def test_exit3_unwritable(capsys):
    assert main(["verify", "--ineq", "hardy", "--p", "2", "--f", "exp(-x)",
                 "--out", "/nonexistent-dir/x.json"]) == 3
    assert "cannot write" in capsys.readouterr().err


def test_exit3_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("runs:\n  - entry: hardy\n    parms: {p: 2}\n")
    assert main(["suite", "--config", str(cfg)]) == 3
    assert "parms" in capsys.readouterr().err


def test_exit3_missing_config(capsys):
    assert main(["suite", "--config", "/nonexistent.yaml"]) == 3


def test_list(capsys, tmp_path):
    out = tmp_path / "cat.json"
    assert main(["list", "--out", str(out)]) == 0
    assert len(_json(out)["entries"]) == 12
    assert "thm34" in capsys.readouterr().out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "hardycheck", "list"], capture_output=True,
                         text=True, check=False)
    assert res.returncode == 0 and "hardy-finite" in res.stdout


# config -----------------------------------------------------------------

def test_config_validation_rejects_unknown_keys():
    for doc in ({"runs": [{"entry": "hardy", "slots": {"f": "x"}, "extra": 1}]},
                {"runs": [], "version": 1},
                {"runs": [{"entry": "hardy", "params": {"p": 2, "r": 1}}]},
                {"runs": [{"entry": "hardy", "quad": {"tol": 1}}]},
                {"runs": [{"entry": "hardy", "slots": {"g": "x"}}]},
                {"runs": [{"kind": "falsify", "entry": "hardy"}]},
                {"runs": [{"kind": "sweep", "entry": "hardy"}]}):
        with pytest.raises(ConfigError):
            validate_config(doc)


def test_suite_three_verdicts(tmp_path):
    cfg = tmp_path / "s.yaml"
    cfg.write_text(yaml.safe_dump({"schema_version": 1, "runs": [
        {"entry": "hardy", "params": {"p": p}, "slots": {"f": "exp(-x)"}} for p in (1.5, 2, 3)]}))
    out = tmp_path / "s.json"
    assert main(["suite", "--config", str(cfg), "--out", str(out), "--workers", "2"]) == 0
    rep = _json(out)
    assert rep["counts"] == {"holds": 3}
    for run in rep["runs"]:
        assert {"entry", "params", "lhs", "lhs_err", "rhs", "constant", "ratio", "outcome",
                "certificates"} <= set(run["result"])
    csv_out = tmp_path / "s.csv"
    assert main(["suite", "--config", str(cfg), "--out", str(csv_out)]) == 0
    assert csv_out.read_text().splitlines()[0].startswith("run,kind,entry,outcome")


def test_per_run_outputs(tmp_path):
    out = tmp_path / "one.json"
    cfg = tmp_path / "s.yaml"
    cfg.write_text(yaml.safe_dump({"runs": [{"entry": "hardy", "params": {"p": 2},
                                             "slots": {"f": "exp(-x)"},
                                             "outputs": {"json": str(out)}}]}))
    assert main(["suite", "--config", str(cfg)]) == 0
    assert _json(out)["runs"][0]["result"]["entry"] == "hardy"


def test_dump_config_round_trip_verify(tmp_path):
    a, b, cfg = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.yaml"
    assert main(["verify", "--ineq", "thm31", "--p", "2", "--a", "0.5", "--q", "1",
                 "--f", "exp(-x)", "--g", "2*x", "--out", str(a), "--dump-config", str(cfg)]) == 0
    assert main(["suite", "--config", str(cfg), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_dump_config_round_trip_falsify(tmp_path):
    a, b, cfg = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.yaml"
    argv = ["falsify", "--ineq", "thm37", "--trials", "5", "--seed", "11"]
    assert main([*argv, "--out", str(a), "--dump-config", str(cfg)]) == 0
    assert main(["suite", "--config", str(cfg), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_env_tolerance_and_flag_override(tmp_path, monkeypatch):
    monkeypatch.setenv("HARDYCHECK_ABS_TOL", "1e-9")
    cfg = tmp_path / "c.yaml"
    main(["verify", "--ineq", "hardy", "--p", "2", "--f", "exp(-x)", "--dump-config", str(cfg)])
    assert yaml.safe_load(cfg.read_text())["runs"][0]["quad"]["abs_tol"] == 1e-9
    main(["verify", "--ineq", "hardy", "--p", "2", "--f", "exp(-x)", "--abs-tol", "1e-7",
          "--dump-config", str(cfg)])
    assert yaml.safe_load(cfg.read_text())["runs"][0]["quad"]["abs_tol"] == 1e-7


# determinism ------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    ["falsify", "--ineq", "thm35", "--trials", "6", "--seed", "3"],
    ["optimize", "--ineq", "hardy", "--p", "2", "--family", "exp-decay", "--seed", "2",
     "--starts", "2", "--max-fev", "10"],
    ["lemmas", "--seed", "4", "--samples", "5"],
    ["sharpness", "--p", "2", "--points", "3"],
])
def test_seeded_reruns_byte_identical(argv, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    code = main([*argv, "--out", str(a)])
    assert main([*argv, "--out", str(b)]) == code
    assert code in (0, 1)
    assert a.read_bytes() == b.read_bytes()


# sweep and trace outputs ------------------------------------------------

def test_sharpness_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sharpness", "--p", "2", "--tmax", "1e6", "--points", "6", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "T,ratio"
    assert len(lines) == 7
    assert float(lines[-1].split(",")[1]) >= 0.85


def test_sharpness_svg_deterministic(tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    for path in (a, b):
        assert main(["sharpness", "--p", "2", "--points", "3", "--plot", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().lstrip().startswith("<?xml")


def test_optimize_outputs(tmp_path):
    csv_out, svg = tmp_path / "t.csv", tmp_path / "t.svg"
    assert main(["optimize", "--ineq", "hardy", "--p", "2", "--family", "trunc-power", "--seed",
                 "0", "--starts", "1", "--max-fev", "12", "--bounds", "alpha=-0.6,-0.4",
                 "--bounds", "T=10,1000",
                 "--out", str(csv_out), "--plot", str(svg)]) == 0
    assert csv_out.read_text().splitlines()[0] == "evaluation,alpha,T,ratio"
    assert svg.stat().st_size > 0


def test_lemmas_report(tmp_path):
    out = tmp_path / "l.json"
    assert main(["lemmas", "--seed", "0", "--samples", "4", "--out", str(out)]) == 0
    rep = _json(out)
    assert rep["counts"] == {"verified-numeric": 8}


# report module ----------------------------------------------------------

def test_to_jsonable_nonfinite():
    import numpy as np
    d = to_jsonable({"a": np.float64("inf"), "b": [float("nan"), np.int64(3)], "c": -np.inf})
    assert d == {"a": "inf", "b": ["nan", 3], "c": "-inf"}
    assert json.loads(dumps({"kind": "x", "v": float("inf")}))["v"] == "inf"


def test_emit_report_errors(tmp_path):
    with pytest.raises(ReportError):
        emit_report({"kind": "suite", "runs": []}, "xml", tmp_path / "a.xml")
    with pytest.raises(ReportError):
        emit_report({"kind": "suite", "runs": []}, "svg", tmp_path / "a.svg")
    with pytest.raises(ReportError):
        emit_report({"kind": "catalog"}, "csv", tmp_path / "a.csv")
