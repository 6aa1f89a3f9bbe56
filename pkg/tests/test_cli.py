"""Command-line surface: config validation, records, exit codes."""

import csv
import json

import pytest

from tipcast import cli
from tipcast.config import apply_overrides, parse_config

QUAD_DOC = {
    "schema": 1,
    "scenario": {"g": "-x^2 + 1 + delta", "g_minus": "-x^2 + 1 + delta",
                 "g_plus": "-x^2 + 1 + delta", "klass": "concave",
                 "params": {"delta": 0.0}, "name": "quad"},
}

# rides the future repeller at this horizon, hence Indeterminate
BCAND_DOC = {
    "schema": 1,
    "scenario": {
        "g": "(1 - splinestep(t; 1, 0))*(-0.01*(x + 3)*(x + 1))"
             " + splinestep(t; 1, 0)*(-0.01*(x - 1)*(x + 1))",
        "g_minus": "-0.01*(x + 3)*(x + 1)",
        "g_plus": "-0.01*(x - 1)*(x + 1)",
        "klass": "concave"},
    "solver": {"horizon": 600.0, "horizon_max": 600.0},
}


def write_doc(tmp_path, doc, name="c.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(args):
    return cli.main(list(args))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------

def test_unknown_top_level_key_is_an_error(tmp_path, capsys):
    doc = {**QUAD_DOC, "extra": 1}
    assert run(["classify", "--config", write_doc(tmp_path, doc)]) == 1
    assert "config.extra: unknown key" in capsys.readouterr().err


def test_schema_version_is_checked(tmp_path, capsys):
    doc = {**QUAD_DOC, "schema": 2}
    assert run(["classify", "--config", write_doc(tmp_path, doc)]) == 1
    assert "config.schema: expected 1" in capsys.readouterr().err


def test_unknown_solver_key_reports_its_path(tmp_path, capsys):
    doc = {**QUAD_DOC, "solver": {"tolerance": 1e-9}}
    assert run(["classify", "--config", write_doc(tmp_path, doc)]) == 1
    assert "solver.tolerance: unknown key" in capsys.readouterr().err


def test_solver_value_ranges_are_checked(tmp_path, capsys):
    doc = {**QUAD_DOC, "solver": {"abs_tol": -1.0}}
    assert run(["classify", "--config", write_doc(tmp_path, doc)]) == 1
    assert "solver:" in capsys.readouterr().err


def test_sweep_rejects_grid_and_range_together():
    doc = {**QUAD_DOC,
           "sweep": {"param": "delta", "grid": [0.0], "start": 0.0,
                     "stop": 1.0, "step": 0.5}}
    from tipcast import ConfigError
    with pytest.raises(ConfigError, match="not both"):
        parse_config(doc)


def test_sweep_range_expands_inclusively():
    doc = {**QUAD_DOC,
           "sweep": {"param": "p", "start": 0.0, "stop": 5.0, "step": 0.5}}
    cfg = parse_config(doc)
    assert len(cfg.sweep.grid) == 11
    assert cfg.sweep.grid[0] == 0.0 and cfg.sweep.grid[-1] == 5.0


def test_output_format_is_validated(tmp_path, capsys):
    doc = {**QUAD_DOC, "output": {"path": "x.yaml", "format": "yaml"}}
    assert run(["classify", "--config", write_doc(tmp_path, doc)]) == 1
    assert "output.format" in capsys.readouterr().err


def test_missing_config_file_is_an_error(capsys):
    assert run(["classify", "--config", "/nonexistent.json"]) == 1
    assert "cannot read config" in capsys.readouterr().err


def test_invalid_json_is_an_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run(["classify", "--config", str(path)]) == 1
    assert "not valid JSON" in capsys.readouterr().err


def test_classify_requires_config(capsys):
    assert run(["classify"]) == 1
    assert "--config is required" in capsys.readouterr().err


def test_bisect_requires_its_block(tmp_path, capsys):
    assert run(["bisect", "--config", write_doc(tmp_path, QUAD_DOC)]) == 1
    assert "bisect: missing config block" in capsys.readouterr().err


def test_set_needs_key_value_shape(tmp_path, capsys):
    path = write_doc(tmp_path, QUAD_DOC)
    assert run(["classify", "--config", path, "--set", "oops"]) == 1
    assert "key=value" in capsys.readouterr().err


def test_mistyped_set_path_is_caught_by_validation(tmp_path, capsys):
    path = write_doc(tmp_path, QUAD_DOC)
    assert run(["classify", "--config", path,
                "--set", "solver.horzion=100"]) == 1
    assert "solver.horzion: unknown key" in capsys.readouterr().err


def test_apply_overrides_parses_json_values():
    doc = apply_overrides({"schema": 1}, ["solver.horizon=2e3",
                                          "output.path=out.csv"])
    assert doc["solver"]["horizon"] == 2000.0
    assert doc["output"]["path"] == "out.csv"


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def test_classify_prints_case_and_exits_zero(tmp_path, capsys):
    assert run(["classify", "--config", write_doc(tmp_path, QUAD_DOC)]) == 0
    out = capsys.readouterr().out
    assert "scenario: quad" in out
    assert "case: A" in out
    assert "witness dist_future_attractor" in out


def test_classify_set_override_changes_the_case(tmp_path, capsys):
    path = write_doc(tmp_path, QUAD_DOC)
    assert run(["classify", "--config", path,
                "--set", "scenario.params.delta=-2"]) == 0
    assert "case: C" in capsys.readouterr().out


def test_classify_indeterminate_exits_two(tmp_path, capsys):
    assert run(["classify", "--config",
                write_doc(tmp_path, BCAND_DOC)]) == 2
    assert "case: Indeterminate" in capsys.readouterr().out


def test_classify_contradictory_class_tag_exits_one(tmp_path, capsys):
    doc = {"schema": 1,
           "scenario": {"g": "-x^3 + x", "g_minus": "-x^3 + x",
                        "g_plus": "-x^3 + x", "klass": "concave"}}
    assert run(["classify", "--config", write_doc(tmp_path, doc)]) == 1
    assert "coercivity" in capsys.readouterr().err


def test_classify_writes_json_record(tmp_path, capsys):
    out = tmp_path / "res.json"
    doc = {**QUAD_DOC, "output": {"path": str(out), "format": "json"}}
    assert run(["classify", "--config", write_doc(tmp_path, doc)]) == 0
    record = json.loads(out.read_text())
    assert record["schema"] == 1
    assert record["command"] == "classify"
    assert record["case"] == "A"
    assert record["witnesses"]["dist_future_attractor"] <= 1e-3


def test_classify_csv_output_gets_a_json_sibling(tmp_path, capsys):
    out = tmp_path / "res.csv"
    doc = {**QUAD_DOC, "output": {"path": str(out), "format": "csv"}}
    assert run(["classify", "--config", write_doc(tmp_path, doc)]) == 0
    rows = read_csv(out)
    assert rows[0][:3] == ["scenario", "case", "tag"]
    assert rows[1][1] == "A"
    assert (tmp_path / "res.json").exists()


# ---------------------------------------------------------------------------
# bisect and sweep
# ---------------------------------------------------------------------------

BISECT_DOC = {
    **QUAD_DOC,
    "bisect": {"param": "delta", "lo": -2.0, "hi": 0.0, "tol": 1e-3},
}


def test_bisect_locates_the_autonomous_fold(tmp_path, capsys):
    out = tmp_path / "cv.csv"
    doc = {**BISECT_DOC, "output": {"path": str(out), "format": "csv"}}
    assert run(["bisect", "--config", write_doc(tmp_path, doc)]) == 0
    stdout = capsys.readouterr().out
    assert "kind: A<->C" in stdout
    rows = read_csv(out)
    assert rows[0] == ["param", "lo", "hi", "mid", "case_lo", "case_hi",
                       "horizon", "bisect_tol", "abs_tol", "rel_tol"]
    record = json.loads((tmp_path / "cv.json").read_text())
    # the quadratic -x^2 + 1 + delta folds at delta = -1
    assert abs(record["value"] + 1.0) < 1e-3
    assert record["value"] == float(rows[1][3])
    assert rows[1][4] == "C" and rows[1][5] == "A"


def test_bisect_output_is_deterministic(tmp_path, capsys):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (out1, out2):
        doc = {**BISECT_DOC, "output": {"path": str(out), "format": "csv"}}
        assert run(["bisect", "--config",
                    write_doc(tmp_path, doc)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_bisect_rejects_parameters_outside_the_catalog(tmp_path, capsys):
    doc = {"schema": 1,
           "scenario": {"name": "order_example", "params": {"b": 0.0}},
           "bisect": {"param": "z", "lo": 0.0, "hi": 1.0}}
    assert run(["bisect", "--config", write_doc(tmp_path, doc)]) == 1
    assert "not a parameter of order_example" in capsys.readouterr().err


def test_sweep_lists_points_and_changes(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    doc = {**QUAD_DOC,
           "sweep": {"param": "delta", "grid": [-2.0, -1.5, 0.0]},
           "output": {"path": str(out), "format": "csv"}}
    assert run(["sweep", "--config", write_doc(tmp_path, doc)]) == 0
    stdout = capsys.readouterr().out
    assert "delta=-2 -> C" in stdout
    assert "delta=0 -> A" in stdout
    assert "change in [-1.5, 0]: C -> A" in stdout
    rows = read_csv(out)
    assert [r[1] for r in rows[1:]] == ["C", "C", "A"]
    record = json.loads((tmp_path / "sweep.json").read_text())
    assert record["brackets"] == [
        {"lo": -1.5, "hi": 0.0, "case_lo": "C", "case_hi": "A"}]


# ---------------------------------------------------------------------------
# trace and limits
# ---------------------------------------------------------------------------

def test_trace_writes_aligned_solution_files(tmp_path, capsys):
    outdir = tmp_path / "tr"
    doc = {**QUAD_DOC,
           "trace": {"t_lo": -5.0, "t_hi": 5.0},
           "output": {"path": str(outdir), "format": "csv"}}
    assert run(["trace", "--config", write_doc(tmp_path, doc)]) == 0
    manifest = json.loads((outdir / "manifest.json").read_text())
    assert manifest["case"] == "A"
    assert set(manifest["files"]) == {"a_g", "r_g", "limits"}
    a = {row[0]: row[1] for row in read_csv(outdir / "a_g.csv")[1:]}
    r = {row[0]: row[1] for row in read_csv(outdir / "r_g.csv")[1:]}
    # lattice snapping makes the t columns join exactly
    assert set(a) == set(r)
    assert "0" in a and "2.5" in a
    limits_rows = read_csv(outdir / "limits.csv")[1:]
    assert limits_rows, "limit solutions are emitted on their own windows"
    assert {row[0] for row in limits_rows} == {"a_minus", "a_plus",
                                               "r_plus"}


def test_trace_requires_an_output_directory(tmp_path, capsys):
    assert run(["trace", "--config", write_doc(tmp_path, QUAD_DOC)]) == 1
    assert "output.path" in capsys.readouterr().err


def test_limits_reports_the_documented_record(tmp_path, capsys):
    doc = {"schema": 1,
           "scenario": {"g": "-x^3 + x", "g_minus": "-x^3 + x",
                        "g_plus": "-x^3 + x", "klass": "dconcave"}}
    assert run(["limits", "--config", write_doc(tmp_path, doc)]) == 0
    record_out = capsys.readouterr().out
    assert "past lower: value=-1 exponent=-2 attractive" in record_out
    assert "past middle: value=0 exponent=1 repulsive" in record_out
    assert "past upper: value=1 exponent=-2 attractive" in record_out


# ---------------------------------------------------------------------------
# repro (reduced grids) and help
# ---------------------------------------------------------------------------

def test_repro_writes_all_three_tables(tmp_path, capsys, monkeypatch):
    monkeypatch.setattr(cli, "_PRED_GRID", [(10.0, 0.0)])
    monkeypatch.setattr(cli, "_LIVE_GRID", [(20.0, 0.02)])
    outdir = tmp_path / "repro"
    assert run(["repro", "--fast", "--set",
                f"output.path={outdir}"]) == 0
    for stem, lead in (("predation", ["10", "0"]),
                       ("predation_migration", ["10", "0"]),
                       ("livestock", ["20", "0.02"])):
        rows = read_csv(outdir / f"{stem}.csv")
        assert rows[0][:2] + rows[0][4:7] == \
            [rows[0][0], rows[0][1], "d", "case_lo", "case_hi"]
        assert rows[1][:2] == lead
        assert rows[1][5] == "A"
        assert (outdir / f"{stem}.json").exists()
    table = read_csv(outdir / "predation.csv")
    assert abs(float(table[1][4]) - 20.5947898) < 5e-2


def test_help_documents_the_catalog(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["classify", "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    assert "concave_pred(d, rho, L, p)" in out
    assert "order_example(b)" in out
    assert "dconcave_series(d, rho=1.0, L1=10.0, L2=40.0, d_plus=0.3)" in out
