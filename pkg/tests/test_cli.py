import json
import subprocess
import sys

import pytest

from minimaxkit import cli

HEADER = ("solver,problem,dim_x,dim_y,kappa_x,kappa_y,eps,mode,seed,grad_x_calls,grad_y_calls,"
          "outer_iters,certificate,cert_error,wall_time_ms,status,clamped")

SOLVE = {
    "problem": {"family": "quadratic_scsc", "dim_x": 2, "dim_y": 2,
                "params": {"kappa_x": 5, "kappa_y": 5}, "seed": 1},
    "solver": {"name": "minimax_appa", "eps": 1e-3, "mode": "practical", "T_constant": 1},
}

SWEEP = {
    "solver": {"name": "minimax_appa", "mode": "practical", "T_constant": 1},
    "problem": {"family": "quadratic_scsc", "dim": 2},
    "grid": {"kappa_x": [10, 20], "kappa_y": [10, 20], "eps": [1e-3], "seeds": [0]},
}


def write(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_header_constant_is_exact():
    assert cli.CSV_HEADER == HEADER


def test_solve_minimal_config(tmp_path, capsys):
    code = cli.main(["solve", write(tmp_path, SOLVE)])
    record = json.loads(capsys.readouterr().out)
    assert code == 0
    assert record["status"] == "ok" and record["mode"] == "practical"
    assert record["certificate"] <= 1e-3 + record["cert_error"]
    assert record["clamped"] in ("yes", "no")
    assert record["wall_time_ms"] != "NA"


def test_solve_writes_output_file(tmp_path):
    out = tmp_path / "record.json"
    code = cli.main(["solve", write(tmp_path, dict(SOLVE, output=str(out)))])
    assert code == 0 and json.loads(out.read_text())["status"] == "ok"


@pytest.mark.parametrize("doc", [
    {"problem": {"family": "nc_sc_sin"}, "solver": {"name": "minimax_ppa", "eps": 1e-2, "T": 3}},
    dict(SOLVE, solver=dict(SOLVE["solver"], eps=0.0)),
    dict(SOLVE, solver=dict(SOLVE["solver"], eps=-1.0)),
    dict(SOLVE, extra=1),
    dict(SOLVE, solver=dict(SOLVE["solver"], colour="red")),
    dict(SOLVE, solver=dict(SOLVE["solver"], mode="fast")),
    dict(SOLVE, solver=dict(SOLVE["solver"], name="nope")),
    {"problem": {"family": "nc_sc_sin"}, "solver": {"name": "nsc_accelerated", "eps": 1e-2, "seed": 1}},
    {"problem": {"family": "unknown"}, "solver": {"name": "minimax_appa", "eps": 1e-2}},
])
def test_solve_invalid_configs_exit_2(tmp_path, doc, capsys):
    assert cli.main(["solve", write(tmp_path, doc)]) == 2
    assert json.loads(capsys.readouterr().out)["status"] == "invalid_config"


def test_solve_unreadable_config_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["solve", str(bad)]) == 2
    assert cli.main(["solve", str(tmp_path / "missing.json")]) == 2


def test_solve_budget_failure_exit_1(tmp_path, capsys):
    doc = dict(SOLVE, solver=dict(SOLVE["solver"], T=3, caps={"outer_cap": 1}))
    assert cli.main(["solve", write(tmp_path, doc)]) == 1
    assert json.loads(capsys.readouterr().out)["status"] == "budget_exhausted"


def test_solve_randomized_solver_records_seed(tmp_path, capsys):
    doc = {"problem": {"family": "nc_sc_sin", "dim_x": 1, "dim_y": 1, "params": {"mu_y": 2.0}},
           "solver": {"name": "minimax_ppa", "eps": 1e-2, "T": 20, "seed": 4, "mode": "practical"},
           "start": {"x0": [1.0], "y0": [0.0]}}
    assert cli.main(["solve", write(tmp_path, doc)]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["seed"] == 4 and record["certificate_kind"] == "stationarity_f"


def run_sweep(tmp_path, doc, name):
    out = tmp_path / name
    doc = dict(doc, output={"csv": str(out)})
    assert cli.main(["sweep", write(tmp_path, doc, name + ".json")]) == 0
    return out.read_bytes()


def test_sweep_grid_rows_and_order(tmp_path):
    text = run_sweep(tmp_path, SWEEP, "a.csv").decode()
    lines = text.splitlines()
    assert lines[0] == HEADER
    assert len(lines) == 5
    rows = cli.read_sweep_csv(text)
    keys = [(r["solver"], float(r["kappa_x"]), float(r["kappa_y"]), float(r["eps"]), int(r["seed"])) for r in rows]
    assert keys == sorted(keys)
    assert all(r["wall_time_ms"] == "NA" and r["status"] == "ok" for r in rows)
    assert {r["clamped"] for r in rows} <= {"yes", "no"}


def test_sweep_byte_identical_across_runs_and_workers(tmp_path, monkeypatch):
    first = run_sweep(tmp_path, SWEEP, "a.csv")
    assert run_sweep(tmp_path, SWEEP, "b.csv") == first
    monkeypatch.setenv(cli.WORKERS_ENV, "2")
    assert run_sweep(tmp_path, SWEEP, "c.csv") == first


def test_sweep_timing_column_when_requested(tmp_path):
    out = tmp_path / "t.csv"
    doc = dict(SWEEP, grid=dict(SWEEP["grid"], kappa_x=[10], kappa_y=[10]),
               output={"csv": str(out), "timing": True})
    assert cli.main(["sweep", write(tmp_path, doc)]) == 0
    row = cli.read_sweep_csv(out.read_text())[0]
    assert float(row["wall_time_ms"]) > 0


def test_sweep_cell_seeds_follow_xor_rule():
    cfg = cli.parse_sweep_config(dict(SWEEP, grid=dict(SWEEP["grid"], seeds=[5, 6])))
    cells = cli.sweep_cells(cfg)
    assert [c[2] for c in cells] == [s ^ i for i, s in enumerate([5, 6] * 4)]


@pytest.mark.parametrize("doc", [
    dict(SWEEP, grid=dict(SWEEP["grid"], kappa_x=[])),
    dict(SWEEP, grid=dict(SWEEP["grid"], eps=[0.0])),
    dict(SWEEP, grid=dict(SWEEP["grid"], kappa_y=[0.5])),
    dict(SWEEP, grid=dict(SWEEP["grid"], extra=[1])),
    dict(SWEEP, workers=0),
    {k: v for k, v in SWEEP.items() if k != "grid"},
])
def test_sweep_invalid_configs_exit_2(tmp_path, doc):
    assert cli.main(["sweep", write(tmp_path, doc)]) == 2


def test_sweep_bad_worker_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "many")
    assert cli.main(["sweep", write(tmp_path, SWEEP)]) == 2


def test_verify_commands(capsys):
    assert cli.main(["verify", "contraction"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)
    assert cli.main(["verify", "moreau"]) == 0
    assert "|x| anchor" in capsys.readouterr().out
    assert cli.main(["verify", "nonexistent"]) == 2


def test_loglog_slope():
    assert cli.loglog_slope([1, 10, 100], [3, 30, 300]) == pytest.approx(1.0)
    assert cli.loglog_slope([1, 100], [2, 20]) == pytest.approx(0.5)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "minimaxkit", "verify", "unknown-suite"],
                          capture_output=True, text=True)
    assert proc.returncode == 2


def test_maximin_ag2_needs_no_T(tmp_path, capsys):
    doc = dict(SOLVE, solver={"name": "maximin_ag2", "eps": 1e-3, "mode": "practical"})
    assert cli.main(["solve", write(tmp_path, doc)]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["T"] == "NA" and record["certificate_kind"] == "duality_gap"
