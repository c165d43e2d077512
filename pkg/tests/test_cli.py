"""Command-line behavior: outputs, exit codes, overrides, determinism."""

import csv
import json
import os

from .conftest import run_cli


def read_csv(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if not (r and r[0].startswith("#"))]
    return rows[0], rows[1:]


def test_simulate_row_count_and_echo(tmp_path):
    out = tmp_path / "grid.csv"
    res = run_cli([
        "simulate", "--p-grid", "0.35", "0.65", "--n-grid", "5", "30",
        "--horizon", "20", "--replications", "4", "--q", "uniform:0.5",
        "--policies", "delta,pi,rr", "--seed", "3",
        "--no-header-timestamp", "--out", str(out),
    ])
    assert res.returncode == 0, res.stderr
    header, rows = read_csv(out)
    assert header[:7] == ["N", "d", "p", "T", "q_spec", "policy", "replications"]
    assert len(rows) == 12  # 2 p-values x 2 source counts x 3 policies
    assert {r[4] for r in rows} == {"uniform:0.5"}
    assert [r[5] for r in rows[:3]] == ["delta", "pi", "rr"]
    # baseline improvement column is zero on delta rows
    for r in rows:
        if r[5] == "delta":
            assert float(r[-1]) == 0.0


def test_simulate_json_format(tmp_path):
    out = tmp_path / "grid.json"
    res = run_cli([
        "simulate", "--n-sources", "2", "--horizon", "10", "--replications", "3",
        "--policies", "delta,pi", "--format", "json",
        "--no-header-timestamp", "--out", str(out),
    ])
    assert res.returncode == 0, res.stderr
    obj = json.loads(out.read_text())
    assert "generated" not in obj
    assert len(obj["rows"]) == 2
    assert obj["rows"][0]["policy"] == "delta"


def test_config_file_with_flag_override(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text(
        "[model]\nn_sources = 2\nhorizon = 10\n"
        "[run]\npolicies = delta, pi\nreplications = 3\n"
    )
    out = tmp_path / "o.csv"
    res = run_cli([
        "simulate", "--config", str(ini), "--replications", "5",
        "--no-header-timestamp", "--out", str(out),
    ])
    assert res.returncode == 0, res.stderr
    _, rows = read_csv(out)
    assert {r[6] for r in rows} == {"5"}  # flag beat the file value


def test_solve_report_fields(tmp_path):
    out = tmp_path / "solve.json"
    res = run_cli([
        "solve", "--n-sources", "2", "--p", "0.5", "--q", "0.7,0.3",
        "--horizon", "4", "--policies", "delta,pi",
        "--no-header-timestamp", "--out", str(out),
    ])
    assert res.returncode == 0, res.stderr
    rep = json.loads(out.read_text())
    assert rep["v_star"] <= rep["v_delta"]
    assert rep["diff"] == rep["v_delta"] - rep["v_star"]
    assert rep["bound_holds"] is True
    assert set(rep["policy_values"]) == {"delta", "pi"}
    assert rep["x0"] == "g=[0,0];h=[1,1]"


def test_solve_degenerate_p_reports_null_z(tmp_path):
    out = tmp_path / "solve.json"
    res = run_cli([
        "solve", "--n-sources", "2", "--p", "0", "--horizon", "5",
        "--policies", "delta", "--no-header-timestamp", "--out", str(out),
    ])
    assert res.returncode == 0, res.stderr
    rep = json.loads(out.read_text())
    assert rep["diff"] == 0.0 and rep["z"] is None and rep["bound"] == 0.0


def test_solve_dump_tables(tmp_path):
    dump = tmp_path / "table.txt"
    res = run_cli([
        "solve", "--n-sources", "1", "--p", "0.5", "--q", "uniform:0.5",
        "--horizon", "3", "--policies", "delta", "--dump-tables", str(dump),
        "--no-header-timestamp", "--out", str(tmp_path / "s.json"),
    ])
    assert res.returncode == 0, res.stderr
    assert dump.read_text().startswith("# value table policy=optimal horizon=3")


def test_sweep_one_file_per_axis(tmp_path):
    out = tmp_path / "sw.csv"
    res = run_cli([
        "sweep", "--p-grid", "0.3", "0.7", "--n-grid", "2", "3",
        "--n-sources", "2", "--horizon", "15", "--replications", "3",
        "--policies", "delta,pi", "--no-header-timestamp", "--out", str(out),
    ])
    assert res.returncode == 0, res.stderr
    p_header, p_rows = read_csv(tmp_path / "sw_p.csv")
    n_header, n_rows = read_csv(tmp_path / "sw_N.csv")
    assert p_header[0] == "p" and [r[0] for r in p_rows] == ["0.3", "0.7"]
    assert n_header[0] == "N" and [r[0] for r in n_rows] == ["2", "3"]
    assert p_header[-1] == "improvement_of_delta_over_pi_pct"
    assert "mean_total_cost_delta" in p_header and "stderr_pi" in p_header


def test_sweep_usage_errors(tmp_path):
    res = run_cli(["sweep", "--out", str(tmp_path / "x.csv")])
    assert res.returncode == 1 and "grid" in res.stderr
    res = run_cli(["sweep", "--p-grid", "0.5", "--replications", "3"])
    assert res.returncode == 1 and "--out" in res.stderr
    res = run_cli([
        "sweep", "--p-grid", "0.5", "--format", "json",
        "--out", str(tmp_path / "x.csv"),
    ])
    assert res.returncode == 1 and "CSV" in res.stderr


def test_exit_codes():
    assert run_cli(["simulate", "--config", "/does/not/exist.ini"]).returncode == 1
    assert run_cli(["solve", "--p", "1.5"]).returncode == 1
    assert run_cli(["simulate", "--policies", "delta,fifo"]).returncode == 1
    res = run_cli([
        "solve", "--n-sources", "6", "--n-channels", "2", "--horizon", "12",
        "--state-cap", "1000",
    ])
    assert res.returncode == 3


def test_byte_determinism_and_timestamp(tmp_path):
    args = [
        "simulate", "--n-sources", "2", "--horizon", "15", "--replications", "4",
        "--policies", "delta,pi", "--seed", "9", "--no-header-timestamp",
    ]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli([*args, "--out", str(a)]).returncode == 0
    assert run_cli([*args, "--out", str(b)]).returncode == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    res = run_cli([*args[:-1], "--out", str(c)])  # timestamp kept
    assert res.returncode == 0
    first = c.read_text().splitlines()[0]
    assert first.startswith("# generated ")


def test_thread_env_does_not_change_output(tmp_path):
    args = [
        "simulate", "--p-grid", "0.3", "0.7", "--n-sources", "2",
        "--horizon", "15", "--replications", "4", "--policies", "delta,pi",
        "--no-header-timestamp",
    ]
    a, b = tmp_path / "seq.csv", tmp_path / "par.csv"
    env_seq = {**os.environ, "AOI_SCHED_THREADS": "1"}
    env_par = {**os.environ, "AOI_SCHED_THREADS": "2"}
    assert run_cli([*args, "--out", str(a)], env=env_seq).returncode == 0
    assert run_cli([*args, "--out", str(b)], env=env_par).returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_bad_thread_env_is_config_error():
    res = run_cli(
        ["simulate", "--n-sources", "1", "--replications", "2", "--horizon", "5"],
        env={**os.environ, "AOI_SCHED_THREADS": "many"},
    )
    assert res.returncode == 1
    assert "AOI_SCHED_THREADS" in res.stderr
