import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualgen.cli import main
from dualgen.errors import ExpressionParseError, SchemaError
from dualgen.scenario import (
    emit_plot_data,
    load_scenario,
    run_scenario,
    serialize,
)


def _bm_mc(**over):
    doc = {
        "name": "bm-self-dual", "mode": "mc",
        "process": {"dim": 1, "diffusion": ["0.5"], "diffusion_deriv": ["0"]},
        "probes": [{"x": [1.0], "y": [0.0], "t": 1.0}],
        "path_config": {"n_paths": 20000, "dt": 0.01, "seed": 7},
    }
    doc.update(over)
    return doc


def _walk_verify():
    return {
        "name": "walk-verify", "mode": "verify-matrix",
        "process": {"dim": 1,
                    "jumps": [{"displacement": [1.0], "rate": 1.5},
                              {"displacement": [-1.0], "rate": 1.0}]},
        "grid": {"lower": [0.0], "upper": [8.0], "spacing": [1.0]},
        "cone": {"type": "pareto"},
        "probes": [{"x": [2.0], "y": [3.0], "t": 0.7}],
    }


def test_round_trip_serialize_load():
    s = load_scenario(_bm_mc())
    assert load_scenario(serialize(s)) == s


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 10 ** 6), st.integers(1, 100),
       st.floats(0.1, 2.0, allow_nan=False))
def test_round_trip_random_parameters(seed, npaths_k, t):
    doc = _bm_mc()
    doc["path_config"] = {"n_paths": 1000 * npaths_k, "dt": 0.01, "seed": seed}
    doc["probes"][0]["t"] = t
    s = load_scenario(doc)
    assert load_scenario(serialize(s)) == s


def test_unknown_field_rejected_with_pointer():
    doc = _bm_mc()
    doc["process"]["driift"] = ["0"]
    with pytest.raises(SchemaError) as ei:
        load_scenario(doc)
    assert "/process" in str(ei.value)


def test_probe_outside_box_names_probe():
    doc = _walk_verify()
    doc["probes"].append({"x": [99.0], "y": [0.0], "t": 1.0})
    with pytest.raises(SchemaError) as ei:
        load_scenario(doc)
    assert "probe 1" in str(ei.value)


def test_dangling_expression_raises_parse_error():
    doc = _bm_mc()
    doc["process"]["drift"] = ["x1 -"]
    with pytest.raises(ExpressionParseError):
        load_scenario(doc)


def test_missing_mode_requirements():
    doc = _walk_verify()
    del doc["grid"]
    with pytest.raises(SchemaError):
        load_scenario(doc)
    doc = _bm_mc()
    del doc["path_config"]
    with pytest.raises(SchemaError):
        load_scenario(doc)


def test_verify_matrix_report_contents(tmp_path):
    rep = run_scenario(load_scenario(_walk_verify()), out_dir=str(tmp_path))
    assert rep["pass"]
    assert rep["results"]["residual"] <= rep["tolerances"]["residual_max"]
    on_disk = json.loads((tmp_path / "report.json").read_text())
    assert on_disk == json.loads(json.dumps(rep))
    csv = (tmp_path / "report.csv").read_text().splitlines()
    assert csv[0] == "t,residual,stochastic"
    assert len(csv) == 2


def test_mc_report_and_plot_data(tmp_path):
    rep = run_scenario(load_scenario(_bm_mc()), out_dir=str(tmp_path))
    assert rep["pass"]
    probe = rep["results"]["probes"][0]
    assert abs(probe["z_score"]) <= 3.5
    out = tmp_path / "plot.csv"
    emit_plot_data(rep, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "scenario,probe_id,side,value,se"
    assert len(lines) == 3                      # lhs + rhs per probe
    assert lines[1].startswith("bm-self-dual,0,lhs,")


def test_plot_data_header_only_without_probes(tmp_path):
    out = tmp_path / "plot.csv"
    emit_plot_data({"scenario": "x", "results": {}}, out)
    assert out.read_text() == "scenario,probe_id,side,value,se\n"


def _write(tmp_path, doc):
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps(doc))
    return str(p)


def test_cli_exit_zero_on_pass(tmp_path, capsys):
    path = _write(tmp_path, _bm_mc())
    code = main(["mc", path, "--out", str(tmp_path / "out")])
    assert code == 0
    assert "bm-self-dual [mc]: pass" in capsys.readouterr().out
    assert (tmp_path / "out" / "report.json").exists()


def test_cli_exit_one_on_failed_tolerance(tmp_path, capsys):
    # wrong declared derivative of the diffusion coefficient: the
    # constructed dual picks up a spurious drift, so the two sides of the
    # duality pairing disagree far beyond the z tolerance
    doc = _bm_mc(name="bm-wrong-deriv")
    doc["process"]["diffusion_deriv"] = ["1"]
    code = main(["mc", _write(tmp_path, doc), "--out", str(tmp_path / "out")])
    assert code == 1
    assert "FAIL" in capsys.readouterr().out
    rep = json.loads((tmp_path / "out" / "report.json").read_text())
    assert not rep["pass"]
    assert abs(rep["results"]["probes"][0]["z_score"]) > 3.5


def test_cli_exit_two_on_bad_scenario(tmp_path, capsys):
    doc = _bm_mc()
    doc["process"]["diffusion"] = ["0.5 +"]
    code = main(["mc", _write(tmp_path, doc)])
    assert code == 2
    assert "error:" in capsys.readouterr().err
    assert main(["mc", str(tmp_path / "missing.json")]) == 2


def test_cli_overrides(tmp_path):
    path = _write(tmp_path, _bm_mc())
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    main(["mc", path, "--out", out1, "--seed", "123", "--paths", "4000"])
    main(["mc", path, "--out", out2, "--seed", "123", "--paths", "4000"])
    rep1 = json.loads((tmp_path / "a" / "report.json").read_text())
    rep2 = json.loads((tmp_path / "b" / "report.json").read_text())
    assert rep1 == rep2
    assert rep1["results"]["probes"][0]["n_paths"] == 4000
    # a different seed changes the estimate
    main(["mc", path, "--out", out1, "--seed", "124", "--paths", "4000"])
    rep3 = json.loads((tmp_path / "a" / "report.json").read_text())
    assert rep3["results"]["probes"][0]["lhs_mean"] != \
        rep1["results"]["probes"][0]["lhs_mean"]


def test_cli_tol_override_forces_failure(tmp_path):
    path = _write(tmp_path, _walk_verify())
    assert main(["verify-matrix", path, "--out", str(tmp_path / "o1")]) == 0
    assert main(["verify-matrix", path, "--out", str(tmp_path / "o2"),
                 "--tol", "1e-18"]) == 1


def test_self_dual_mode(tmp_path):
    doc = {
        "name": "self-dual-bm", "mode": "self-dual-check",
        "process": {"dim": 1, "diffusion": ["0.5"], "diffusion_deriv": ["0"]},
    }
    rep = run_scenario(load_scenario(doc), out_dir=str(tmp_path))
    assert rep["pass"] and rep["results"]["self_dual"]
    csv = (tmp_path / "report.csv").read_text().splitlines()
    assert csv == ["key,value", "self_dual,true"]


def test_dual_mode_reports_probe_values(tmp_path):
    doc = {
        "name": "ou-dual", "mode": "dual",
        "process": {"dim": 1, "diffusion": ["1"], "diffusion_deriv": ["0"],
                    "drift": ["0 - x1"]},
        "probes": [{"x": [1.0], "y": [0.0], "t": 1.0}],
    }
    rep = run_scenario(load_scenario(doc), out_dir=str(tmp_path))
    assert rep["pass"]
    row = rep["results"]["dual_at_probes"][0]
    # dual drift = a' - b = 0 - (-x) = x
    assert row["dual_drift"][0] == pytest.approx(1.0)
    assert row["dual_diffusion_diag"][0] == pytest.approx(1.0)
