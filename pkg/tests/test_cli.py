import csv
import json
import os
import subprocess
import sys

import jsonschema
import pytest

from presto.cli import main
from presto.engine import PmcExpression
from presto.model import FRUIT_SNAPSHOTS, MONITORED

from conftest import DATA, golden

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
MODEL = os.path.join(DATA, "fruitpicking.pdtmc")
PROPS = os.path.join(DATA, "requirements.pctl")
OBS = os.path.join(DATA, "observations.csv")
SCHEMA = json.load(open(os.path.join(ROOT, "docs", "report.schema.json"), encoding="utf-8"))


def write_obs(path, values, n, drop=()):
    cols = [k for k in MONITORED if k not in drop]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + cols)
        for t in range(1, n + 1):
            w.writerow([t] + [values[k] for k in cols])


def test_check_writes_golden_expressions(tmp_path, capsys):
    out = tmp_path / "expr.json"
    assert main(["check", "--model", MODEL, "--props", PROPS, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    exprs = [PmcExpression.from_json(d) for d in doc["expressions"]]
    assert [e.requirement_id for e in exprs] == ["R1", "R2", "R3"]
    for e in exprs:
        assert e.function.equals(golden(e.requirement_id))
    assert capsys.readouterr().out.startswith("R1: ")


def test_check_unknown_reward(tmp_path, capsys):
    props = tmp_path / "p.pctl"
    props.write_text('R{"cost"}=? [ F "done" ] <= 3\n')
    assert main(["check", "--model", MODEL, "--props", str(props), "--out", str(tmp_path / "e.json")]) == 3
    assert "cost" in capsys.readouterr().err


def test_check_parse_errors(tmp_path):
    props = tmp_path / "empty.pctl"
    props.write_text("")
    assert main(["check", "--model", MODEL, "--props", str(props), "--out", str(tmp_path / "e.json")]) == 2
    model = tmp_path / "bad.pdtmc"
    model.write_text("pdtmc; state a a -> a : 1;")
    assert main(["check", "--model", str(model), "--props", PROPS, "--out", str(tmp_path / "e.json")]) == 2
    assert main(["check", "--model", str(tmp_path / "none"), "--props", PROPS, "--out", str(tmp_path / "e.json")]) == 2


def test_predict_report(tmp_path, capsys):
    expr = tmp_path / "expr.json"
    main(["check", "--model", MODEL, "--props", PROPS, "--out", str(expr)])
    out = tmp_path / "report.json"
    code = main(["predict", "--model", MODEL, "--props", PROPS, "--expr", str(expr), "--obs", OBS,
                 "--horizon", "240", "--tau", "30", "--method", "arima", "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    jsonschema.validate(report, SCHEMA)
    by_id = {r["requirement"]: r for r in report["results"]}
    assert by_id["R1"]["t_p"] is not None and by_id["R2"]["t_p"] is not None
    assert by_id["R3"]["t_p"] is None
    assert by_id["R1"]["trigger_time"] == by_id["R1"]["t_p"] - 30
    assert report["now"] == 360 and report["forecaster"] == "arima(1,1,0)"
    rows = list(csv.reader(open(tmp_path / "report_trajectory.csv")))
    assert rows[0] == ["minute", "R1", "R2", "R3"] and len(rows) == 241
    assert (tmp_path / "report_trajectory.png").stat().st_size > 0
    assert "R3" in capsys.readouterr().out


def test_predict_benign_horizon_one(tmp_path):
    obs = tmp_path / "obs.csv"
    write_obs(obs, FRUIT_SNAPSHOTS["now-360"], 30)
    out = tmp_path / "r.json"
    assert main(["predict", "--model", MODEL, "--props", PROPS, "--obs", str(obs), "--horizon", "1",
                 "--method", "drift", "--out", str(out), "--no-plots"]) == 0
    report = json.loads(out.read_text())
    jsonschema.validate(report, SCHEMA)
    assert all(r["t_p"] is None and not r["violation_at_now"] for r in report["results"])
    assert not (tmp_path / "r_trajectory.png").exists()


def test_predict_missing_column(tmp_path, capsys):
    obs = tmp_path / "obs.csv"
    write_obs(obs, FRUIT_SNAPSHOTS["now"], 30, drop=("beta",))
    assert main(["predict", "--model", MODEL, "--props", PROPS, "--obs", str(obs),
                 "--out", str(tmp_path / "r.json")]) == 4
    assert "beta" in capsys.readouterr().err


@pytest.mark.parametrize("extra", [["--horizon", "0"], ["--tau", "-5"], ["--method", "holt"],
                                   ["--order", "1,1"]])
def test_predict_bad_options(tmp_path, extra):
    args = ["predict", "--model", MODEL, "--props", PROPS, "--obs", OBS, "--out", str(tmp_path / "r.json")]
    assert main(args + extra) == 5


def test_predict_explicit_order(tmp_path):
    out = tmp_path / "r.json"
    assert main(["predict", "--model", MODEL, "--props", PROPS, "--obs", OBS, "--order", "2,1,1",
                 "--out", str(out), "--no-plots"]) == 0
    assert json.loads(out.read_text())["forecaster"] == "arima(2,1,1)"


def test_simulate_noiseless(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 0, "runs": 200}))
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    stats = json.loads((out / "stats.json").read_text())
    for rs in stats["requirements"].values():
        assert rs["counts"]["false-positive"] == 0 and rs["counts"]["false-negative"] == 0
    names = set(os.listdir(out))
    assert {"batch.csv", "stats.json", "tau_sweep.csv", "trajectory_0.csv", "trajectory_0.png",
            "errors.png", "tau_sweep.png"} <= names
    assert "TP" in capsys.readouterr().out


def test_simulate_is_deterministic(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 5, "runs": 12, "noise_level": 4}))
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a"), "--no-plots"])
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b"), "--no-plots", "--jobs", "2"])
    for name in ("batch.csv", "stats.json", "tau_sweep.csv", "trajectory_0.csv"):
        a = (tmp_path / "a" / name).read_text()
        b = (tmp_path / "b" / name).read_text()
        if name == "stats.json":
            a, b = json.loads(a), json.loads(b)
            a["config"].pop("jobs"), b["config"].pop("jobs")
        assert a == b, name


def test_tausweep(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"runs": 20, "tau": [0, 30, 240]}))
    assert main(["tausweep", "--config", str(cfg), "--out", str(tmp_path / "o"), "--no-plots"]) == 0
    rows = list(csv.reader(open(tmp_path / "o" / "tau_sweep.csv")))
    assert [r[0] for r in rows[1:]] == ["0", "30", "240"]
    assert capsys.readouterr().out.startswith("tau")


@pytest.mark.parametrize("body", ['{"runs": 0}', '{"noise_level": 7}', "not json", '{"props": "missing.pctl"}'])
def test_simulate_config_errors(tmp_path, body):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(body)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 5


def test_simulate_bad_jobs(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{}")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o"), "--jobs", "0"]) == 5


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "presto.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("presto ")
    proc = subprocess.run([sys.executable, "-m", "presto.cli", "check", "--model", MODEL, "--props", PROPS,
                           "--out", str(tmp_path / "e.json")], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.count("\n") == 3
