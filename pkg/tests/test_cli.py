import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from eprbell.cli import dumps, main
from eprbell.core import CSV_HEADER, read_records_csv

CONFIGS = Path(__file__).resolve().parent.parent / "demos" / "configs"

SMALL = """
[experiment]
trials = 30000
seed = 4
source = {source}

[directions]
A = 0
B = 45
C = 90

[geometry]
t_o = 0
t_f = 12000
"""


def write_config(tmp_path, source="qm"):
    path = tmp_path / "exp.ini"
    path.write_text(SMALL.format(source=source))
    return path


def test_simulate_and_audit(tmp_path, capsys):
    cfg = write_config(tmp_path, "selection_correlated")
    out, summary, report = tmp_path / "r.csv", tmp_path / "s.json", tmp_path / "a.json"
    assert main(["simulate", "--config", str(cfg), "--out", str(out),
                 "--summary", str(summary)]) == 0
    assert out.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    assert json.loads(summary.read_text())["M_total"] == 30000
    assert main(["audit", "--records", str(out), "--report", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["bi_count_form"]["verdict"] == "Violated"
    assert data["decomposition"]["partitions_exact"]
    assert data["tilde_inequality"]["verdict"] == "Satisfied"
    assert "Violated" in capsys.readouterr().out


def test_audit_without_traces(tmp_path):
    out, report = tmp_path / "r.csv", tmp_path / "a.json"
    main(["simulate", "--config", str(write_config(tmp_path)), "--out", str(out)])
    assert main(["audit", "--records", str(out), "--report", str(report),
                 "--triple", "A,B,C", "--partition", "halves"]) == 0
    data = json.loads(report.read_text())
    assert "refused" in data["decomposition"]
    assert set(data["place_selection"]) == {"A,B", "B,C", "A,C"}


def test_simulate_workers_identical(tmp_path):
    cfg = write_config(tmp_path, "deterministic_uniform")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["simulate", "--config", str(cfg), "--out", str(a), "--workers", "1"])
    main(["simulate", "--config", str(cfg), "--out", str(b), "--workers", "3"])
    assert a.read_bytes() == b.read_bytes()


def test_feasibility_command(tmp_path, capsys):
    targets = tmp_path / "t.json"
    s = 0.5 * math.sin(math.pi / 8) ** 2
    targets.write_text(json.dumps({"ab": s, "bc": s, "ac": 0.25}))
    assert main(["feasibility", "--targets", str(targets)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["feasible"] is False
    assert out["certificate"]["name"] == "n_ab + n_bc >= n_ac"
    targets.write_text(json.dumps({"ab": 0.25, "bc": 0.25, "ac": 0.25}))
    main(["feasibility", "--targets", str(targets), "--asymmetric"])
    out = json.loads(capsys.readouterr().out)
    assert out["feasible"] is True and len(out["witness"]) == 8


def test_feasibility_survey(tmp_path, capsys):
    rows = tmp_path / "rows.csv"
    people = ["tall,blue,male", "short,brown,female", "tall,brown,male", "short,blue,female",
              "tall,blue,female", "short,brown,male", "tall,brown,female", "short,blue,male"]
    rows.write_text("height,eyes,gender\n" + "\n".join(people * 50) + "\n")
    assert main(["feasibility", "survey", "--rows", str(rows),
                 "--conspiratorial", "60000", "--seed", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["complete_rows"]["verdict"] == "Satisfied"
    assert out["selected_sampling"]["verdict"] == "Violated"


def test_constraints_command(capsys):
    assert main(["constraints", "--config", str(CONFIGS / "orsay_like.ini")]) == 0
    text = capsys.readouterr().out
    report = json.loads(text[:text.index("\n\n")])
    assert report["verdicts"]["preset"] is False
    assert "published 4.44e-08" in text


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "nope.ini"),
                 "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["feasibility"]) == 2
    assert "error" in capsys.readouterr().err


def test_dumps_replaces_nan():
    assert json.loads(dumps({"x": math.nan, "y": [math.inf, 1.0]})) == {"x": None,
                                                                         "y": [None, 1.0]}


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "eprbell.cli", "--help"], capture_output=True,
                       text=True)
    assert r.returncode == 0
    for cmd in ("simulate", "audit", "feasibility", "constraints"):
        assert cmd in r.stdout
