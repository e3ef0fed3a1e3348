import json

import pytest

from scpwalk.cli import main
from scpwalk.errors import ValidationError
from scpwalk.io import dumps, measure_from_doc, measure_to_doc

TRIANGLE = {"n": 3, "spec": {"kind": "spanning_tree", "vertices": 3, "edges": [[0, 1], [1, 2], [0, 2]]}}
SLICE42 = {"n": 4, "spec": {"kind": "conditioned_sum", "p": ["1/2"] * 4, "k": 2}}
BAD = {"n": 2, "spec": {"kind": "explicit", "table": {"00": 0.4, "11": 0.4, "01": 0.1, "10": 0.1}}}


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, doc in (("triangle", TRIANGLE), ("slice42", SLICE42), ("bad", BAD)):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(doc))
        out[name] = str(p)
    return out


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_scp_check(files, capsys):
    code, out = run(capsys, "scp", "check", "--measure", files["triangle"], "--mode", "full")
    assert code == 0 and json.loads(out)["holds"] is True
    code, out = run(capsys, "scp", "check", "--measure", files["bad"])
    assert code == 1 and json.loads(out)["witness"]["S"] == [1]


def test_certify_slice(files, capsys):
    code, out = run(capsys, "constants", "certify", "--measure", files["slice42"],
                    "--walk", "mcmc", "--target", "alpha")
    doc = json.loads(out)
    assert code == 0 and doc["bound"] == "1/16" and doc["passed"]


def test_missing_n_is_usage_error(capsys):
    code, out = run(capsys, "measure", "build", "--spec", '{"kind":"product","p":[0.5]}')
    assert code == 2 and out == ""


def test_usage_errors(files, capsys):
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "walk", "mcmc")[0] == 2
    assert run(capsys, "walk", "mcmc", "--measure", "/nonexistent.json")[0] == 2
    assert run(capsys, "walk", "bases-exchange", "--measure", files["bad"])[0] == 2
    assert run(capsys, "measure", "condition", "--measure", files["triangle"], "--assign", "1=0,2=0")[0] == 2


def test_measure_commands(files, capsys):
    code, out = run(capsys, "measure", "build", "--spec",
                    '{"n": 2, "kind": "conditioned_sum", "p": [0.5, 0.5], "k": 1}')
    assert code == 0 and json.loads(out)["spec"]["table"] == {"01": "1/2", "10": "1/2"}
    code, out = run(capsys, "measure", "condition", "--measure", files["triangle"], "--assign", "3=1")
    doc = json.loads(out)
    assert doc["spec"]["table"] == {"01": "1/2", "10": "1/2"} and doc["coordinates"] == {"1": 1, "2": 2}
    code, out = run(capsys, "measure", "split", "--measure", files["triangle"], "--coord", "3")
    assert json.loads(out)["projection"] == ["1/3", "2/3"]


def test_walks_and_constants(files, capsys):
    code, out = run(capsys, "walk", "bases-exchange", "--measure", files["triangle"])
    assert code == 0 and json.loads(out)["stats"]["m"] == "1/12"
    code, out = run(capsys, "walk", "synthesize", "--measure", files["triangle"])
    assert code == 0 and json.loads(out)["passed"]
    code, out = run(capsys, "constants", "exact", "--measure", files["slice42"])
    assert abs(json.loads(out)["value"] - 0.25) < 1e-12
    code, out = run(capsys, "constants", "estimate", "--measure", files["triangle"], "--walk",
                    "bases-exchange", "--kind", "lsi", "--restarts", "4")
    assert code == 0 and json.loads(out)["value"] >= 1 / 12
    code, out = run(capsys, "constants", "two-state", "--a", "2", "--b", "2")
    assert json.loads(out)["rho"] == "2"


def test_generator_file_walk(files, capsys, tmp_path):
    code, out = run(capsys, "walk", "mcmc", "--measure", files["slice42"])
    g = tmp_path / "gen.json"
    g.write_text(json.dumps(json.loads(out)["generator"]))
    code, out = run(capsys, "constants", "certify", "--measure", files["slice42"], "--walk", str(g))
    assert code == 0 and json.loads(out)["bound"] == "1/16"


def test_mixing_and_conc(files, capsys):
    code, out = run(capsys, "mixing", "time", "--measure", files["triangle"], "--walk",
                    "bases-exchange", "--start", "110", "--epsilon", "0.125")
    assert code == 0 and json.loads(out)["passed"]
    code, out = run(capsys, "mixing", "bound", "--kind", "pi", "--constant", "0.5",
                    "--pi-x", "0.25", "--epsilon", "0.25")
    assert abs(json.loads(out)["bound"] - 2.772588722239781) < 1e-12
    code, out = run(capsys, "conc", "herbst", "--measure", files["slice42"], "--f-coords", "1,2")
    assert code == 0 and json.loads(out)["all_pass"]
    code, out = run(capsys, "conc", "pp", "--measure", files["slice42"], "--f", "[0,1,1,1,1,2]")
    assert code == 0 and json.loads(out)["constants"]["k"] == 2


def test_output_is_deterministic(files, capsys):
    argv = ["constants", "estimate", "--measure", files["slice42"], "--restarts", "3", "--seed", "7"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_pretty_keeps_exit_code(files, capsys):
    code, out = run(capsys, "scp", "check", "--measure", files["bad"], "--pretty")
    assert code == 1 and "holds: False" in out


def test_suite_subset(capsys):
    code, out = run(capsys, "suite", "run", "--criteria", "3,10")
    doc = json.loads(out)
    assert code == 0 and doc["passed"] and [c["criterion"] for c in doc["criteria"]] == [3, 10]


def test_measure_doc_roundtrip():
    m = measure_from_doc(TRIANGLE)
    assert measure_from_doc(measure_to_doc(m)) == m
    with pytest.raises(ValidationError):
        measure_from_doc({"n": 2, "spec": {"kind": "product", "p": [0.5]}})
    with pytest.raises(ValidationError):
        measure_from_doc({"n": 2, "spec": {"kind": "explicit", "table": {"0": 1}}})
    assert dumps({"b": float("inf"), "a": 1}) == '{"a": 1, "b": "inf"}'
