import io
import json
import subprocess
import sys

import pytest

from polyshare import programs
from polyshare.cli import CAPACITY, INFEASIBLE, INPUT_ERROR, MISMATCH, OK, main
from polyshare.ir import to_json

EX1 = str(programs.path("example1"))
MM = str(programs.path("two_matmul"))
PARAMS = ["--param", "n1=2", "--param", "n2=3", "--param", "n3=2"]


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def plan_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("plans") / "plan.json"
    code, _ = run("optimize", EX1, *PARAMS, "--mem-cap", "100", "--out", str(path))
    assert code == OK
    return path


def test_analyze_text_and_json():
    code, text = run("analyze", EX1)
    assert code == OK
    assert text.startswith("3 dependences, 5 sharing opportunities")
    code, text = run("analyze", MM, "--json", "--param", "n1=2", "--param", "n2=2", "--param", "n3=2", "--param", "n4=2")
    doc = json.loads(text)
    assert len(doc["opportunities"]) == 9
    assert all("pairs" in o for o in doc["opportunities"])


def test_analyze_reports_reduction(ex1, tmp_path):
    code, text = run("analyze", EX1, "--json", "--param", "n1=2", "--param", "n2=2", "--param", "n3=3")
    opp = next(o for o in json.loads(text)["opportunities"] if o["id"] == "s1WC->s2RC")
    assert opp["multiplicity"] == "one-many" and opp["reduced_multiplicity"] == "one-one"
    assert (opp["pairs_before_reduction"], opp["pairs"]) == (12, 4)
    js = tmp_path / "ex1.json"
    js.write_text(to_json(ex1))
    assert run("analyze", str(js))[1] == run("analyze", EX1)[1]


def test_optimize_selects_triple(plan_file):
    doc = json.loads(plan_file.read_text())
    assert set(doc["realized"]) == {"s1WC->s2RC", "s2WE->s2RE", "s2WE->s2WE"}
    assert doc["predicted"]["peak_bytes"] == 5
    assert sum(doc["predicted"]["reads_bytes"].values()) == 30


def test_optimize_plan_space_outputs(tmp_path):
    csv_path, json_path = tmp_path / "p.csv", tmp_path / "p.json"
    assert run("optimize", EX1, *PARAMS, "--mem-cap", "4", "--plan-space", str(csv_path))[0] == OK
    assert run("optimize", EX1, *PARAMS, "--mem-cap", "4", "--plan-space", str(json_path))[0] == OK
    rows = csv_path.read_text().splitlines()
    assert rows[0].startswith("plan,realized,")
    assert len(rows) - 1 == len(json.loads(json_path.read_text()))
    first = csv_path.read_text()
    run("optimize", EX1, *PARAMS, "--mem-cap", "4", "--plan-space", str(csv_path))
    assert csv_path.read_text() == first


def test_optimize_infeasible_cap():
    code, text = run("optimize", EX1, *PARAMS, "--mem-cap", "0")
    assert code == INFEASIBLE
    assert "least-memory plan" in text


def test_simulate_ok(plan_file):
    code, text = run("simulate", EX1, *PARAMS, "--plan", str(plan_file), "--mem-cap", "100")
    assert code == OK, text
    assert "verdict: ok" in text


def test_simulate_trace_and_json(plan_file):
    code, text = run("simulate", EX1, *PARAMS, "--plan", str(plan_file), "--mem-cap", "100", "--trace", "--json")
    assert code == OK
    assert " hit" in text and "write(deferred)" in text
    blob = text[text.index("{"):text.rindex("}") + 1]
    assert json.loads(blob)["verdict"]["ok"] is True


def test_simulate_capacity_violation(plan_file):
    code, text = run("simulate", EX1, *PARAMS, "--plan", str(plan_file), "--mem-cap", "4")
    assert code == CAPACITY
    assert "capacity violation" in text


def test_simulate_mismatch_against_stored_prediction(plan_file, tmp_path):
    doc = json.loads(plan_file.read_text())
    doc["predicted"]["reads_bytes"]["A"] += 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, text = run("simulate", EX1, *PARAMS, "--plan", str(bad), "--mem-cap", "100")
    assert code == MISMATCH
    assert "mismatch reads_bytes A" in text


@pytest.mark.parametrize("tamper", [
    lambda d: d.update(format="x"),
    lambda d: d.update(realized=["s9RZ->s9RZ"]),
    lambda d: d["statements"]["s2"].update(constant=0),
    lambda d: d["statements"]["s1"]["rows"][0].__setitem__(-1, "0"),
])
def test_simulate_rejects_tampered_plans(plan_file, tmp_path, tamper):
    doc = json.loads(plan_file.read_text())
    tamper(doc)
    bad = tmp_path / "tampered.json"
    bad.write_text(json.dumps(doc))
    code, _ = run("simulate", EX1, *PARAMS, "--plan", str(bad), "--mem-cap", "100")
    assert code == INPUT_ERROR


def test_simulate_rejects_illegal_schedule(plan_file, tmp_path):
    doc = json.loads(plan_file.read_text())
    doc["statements"]["s1"]["constant"], doc["statements"]["s2"]["constant"] = 1, 0
    bad = tmp_path / "swap.json"
    bad.write_text(json.dumps(doc))
    assert run("simulate", EX1, *PARAMS, "--plan", str(bad), "--mem-cap", "100")[0] == INPUT_ERROR


@pytest.mark.parametrize("argv", [
    ["analyze", "/nonexistent.ps"],
    ["optimize", EX1, "--mem-cap", "5"],
    ["optimize", EX1, *PARAMS, "--param", "zz=1", "--mem-cap", "5"],
    ["optimize", EX1, "--param", "n1", "--mem-cap", "5"],
    ["optimize", EX1, *PARAMS, "--mem-cap", "-1"],
    ["optimize", EX1, *PARAMS, "--mem-cap", "5", "--read-rate", "0"],
    ["optimize", EX1, "--param", "n1=0", "--param", "n2=1", "--param", "n3=1", "--mem-cap", "5"],
    ["frobnicate"],
])
def test_input_errors(argv):
    assert run(*argv)[0] == INPUT_ERROR


def test_parse_error_is_input_error(tmp_path):
    bad = tmp_path / "bad.ps"
    bad.write_text("param n;\nfor i in 0 .. n { s: write Q[i] <- ; }")
    assert run("analyze", str(bad))[0] == INPUT_ERROR


def test_empty_program(tmp_path):
    p = tmp_path / "empty.ps"
    p.write_text("param n;\narray A[n] block 1;\n")
    out = tmp_path / "plan.json"
    assert run("optimize", str(p), "--param", "n=2", "--mem-cap", "0", "--out", str(out))[0] == OK
    assert run("simulate", str(p), "--param", "n=2", "--plan", str(out), "--mem-cap", "0")[0] == OK


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "polyshare", "analyze", EX1], capture_output=True, text=True)
    assert r.returncode == 0 and "sharing opportunities" in r.stdout
