import json

import pytest

from negadrift.cli import csv_table, fmt_number, json_line, main

SBM = ["bound", "sbm", "--n", "500", "--p", "1/500", "--alpha", "2", "--delta", "0.01",
       "--a", "0", "--b", "11", "--lambda", "100", "--L", "1000"]


def run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_bound_sbm_record(capsys):
    code, out, _ = run(capsys, SBM)
    rec = json.loads(out)
    assert code == 0 and rec["bound"] == "sbm"
    assert rec["evaluations"] > 1.3e7
    assert rec["log_evaluations"] == pytest.approx(16.391067728753548)


def test_bound_rejection_exit_code(capsys):
    code, out, err = run(capsys, SBM[:-5] + ["12", "--lambda", "100", "--L", "1000"])
    assert code == 2 and out == ""
    rec = json.loads(err)
    assert rec["error"] == "precondition" and "b exceeds b_tilde" in rec["message"]


@pytest.mark.parametrize("argv", [
    ["bound", "sbm", "--n", "500"],
    ["bound", "sbm", "--frobnicate", "1"],
    ["bound", "sbm"] + SBM[2:4] + ["--p", "abc"],
    ["nonsense"],
])
def test_schema_errors(capsys, argv):
    code, _, err = run(capsys, argv)
    assert code == 2 and json.loads(err)["error"] == "schema"


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 500, "p": "1/500", "alpha": 2, "delta": 0.01, "a": 0,
                               "b": 11, "lambda": 100, "L": 1000}))
    code, out, _ = run(capsys, ["--config", str(cfg), "bound", "sbm", "--b", "10"])
    assert code == 0 and json.loads(out)["b"] == 10
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, err = run(capsys, ["bound", "sbm", "--config", str(cfg)])
    assert code == 2 and "bogus" in json.loads(err)["message"]


def test_other_bounds(capsys):
    for argv in (["bound", "lemma1", "--delta", "0.1", "--Delta", "1", "--M", "1e4", "--L", "3"],
                 ["bound", "psm", "--kappa", "1", "--a", "0", "--b", "5", "--delta", "0.1",
                  "--D", "1", "--lambda", "2"],
                 ["bound", "corollary", "--n", "500", "--p", "0.002", "--alpha", "2",
                  "--lambda", "100"],
                 ["bound", "mixed", "--n", "1000", "--mutation", "heavy:1.5", "--alpha", "1.5",
                  "--gamma", "0.5", "--a", "0", "--b", "20", "--lambda", "10"],
                 ["bound", "simple-ga", "--n", "1000000"]):
        code, out, err = run(capsys, argv)
        assert code == 0, err
        assert json.loads(out)["bound"] == argv[1]


def test_sweep_keeps_rejected_points(capsys):
    code, out, _ = run(capsys, ["sweep", "sbm", "--grid", "b=9,11,12", "--grid", "delta=0.01,0.02",
                                "--n", "500", "--p", "1/500", "--alpha", "2", "--a", "0",
                                "--lambda", "100"])
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 1 + 6
    header = lines[0].split(",")
    status = [dict(zip(header, ln.split(",")))["status"] for ln in lines[1:]]
    assert status == ["ok", "ok", "ok", "rejected", "rejected", "rejected"]


def test_stochastic_commands_need_seed(capsys, monkeypatch):
    monkeypatch.delenv("NEGADRIFT_SEED", raising=False)
    code, _, err = run(capsys, ["simulate", "--n", "10", "--mu", "1", "--lambda", "2", "--L", "3"])
    assert code == 2 and "seed" in json.loads(err)["message"]
    monkeypatch.setenv("NEGADRIFT_SEED", "4")
    code, out, _ = run(capsys, ["simulate", "--n", "10", "--mu", "1", "--lambda", "2", "--L", "3"])
    assert code == 0 and out.startswith("t,min_g,log_potential,hit")
    code2, out2, _ = run(capsys, ["simulate", "--n", "10", "--mu", "1", "--lambda", "2", "--L", "3",
                                  "--seed", "4"])
    assert out2 == out


def test_verify_commands(capsys):
    code, out, _ = run(capsys, ["verify", "lemma1-oracle", "--chains", "5", "--seed", "7",
                                "--horizon", "50", "--workers", "1"])
    recs = [json.loads(x) for x in out.splitlines()]
    assert code == 0 and recs[-1]["chains"] == 5 and recs[-1]["violations"] == 0
    code, out, _ = run(capsys, ["verify", "domination", "--max-n", "5"])
    assert code == 0 and json.loads(out.splitlines()[-1])["holds"] is True
    code, out, _ = run(capsys, ["verify", "conditions", "--n", "500", "--mutation", "fixed:1/500",
                                "--B", "6.7384880875390714", "--alpha", "2", "--delta", "0.01",
                                "--a", "0", "--b", "11"])
    assert code == 0 and all(json.loads(x)["check"].startswith("condition")
                             for x in out.splitlines())
    code, out, _ = run(capsys, ["verify", "drift", "--n", "12", "--mu", "2", "--lambda", "4",
                                "--samples", "2", "--reps", "200", "--seed", "1", "--workers", "1"])
    assert code == 0 and len(out.splitlines()) == 2


def test_experiment_and_schema(capsys, tmp_path):
    per = tmp_path / "runs.csv"
    code, out, _ = run(capsys, ["experiment", "hitting-time", "--n", "20", "--mu", "2",
                                "--lambda", "4", "--a", "4", "--L", "40", "--reps", "6",
                                "--seed", "3", "--workers", "1", "--per-run", str(per)])
    assert code == 0 and out.startswith("reps,a,L,hits")
    assert len(per.read_text().splitlines()) == 7
    code, out, _ = run(capsys, ["schema"])
    assert code == 0 and "[simulate]" in out


def test_number_formatting():
    assert fmt_number(0.1) == "0.10000000000000001"
    assert float(fmt_number(1 / 3)) == 1 / 3
    assert fmt_number(float("inf")) == '"inf"'
    assert json.loads(json_line({"x": float("-inf"), "y": 2, "z": None, "s": "a"})) == \
        {"x": "-inf", "y": 2, "z": None, "s": "a"}
    assert csv_table([{"a": 1}, {"b": 0.5}]) == "a,b\n1,\n,0.5\n"


def test_oracle_output_is_byte_identical(capsys):
    argv = ["verify", "lemma1-oracle", "--chains", "20", "--seed", "7", "--horizon", "200"]
    first = run(capsys, argv + ["--workers", "1"])[1]
    second = run(capsys, argv + ["--workers", "2"])[1]
    assert first == second and first.count("\n") == 21
