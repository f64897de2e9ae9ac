import json
import subprocess
import sys
from pathlib import Path

import pytest

from conftest import NO_CONIFOLD, OPERATORS, pipeline
from cymonodromy.cli import (CorpusError, EquationRecord, InputError, PipelineOptions, ResultRecord, emit_report,
                             load_corpus, main, operator_from_parts, run_pipeline)
from cymonodromy.opcore import parse_operator

ROOT = Path(__file__).resolve().parent.parent
SAMPLE = ROOT / "data" / "sample_corpus.jsonl"


def _write(tmp_path, lines):
    p = tmp_path / "corpus.jsonl"
    p.write_text("".join(line + "\n" for line in lines))
    return p


def test_load_two_entries(tmp_path):
    p = _write(tmp_path, [json.dumps({"id": "a", "operator": OPERATORS["quintic"]}),
                          json.dumps({"id": "b", "operator": {"theta_parts": [[0, 0, 0, 0, 1], [-1, -2]]}})])
    recs = load_corpus(p)
    assert [r.id for r in recs] == ["a", "b"]


def test_load_duplicate_id(tmp_path):
    line = json.dumps({"id": "AESZ-28", "operator": OPERATORS["AESZ-28"]})
    with pytest.raises(CorpusError, match="AESZ-28"):
        load_corpus(_write(tmp_path, [line, line]))


def test_load_empty_and_malformed(tmp_path):
    assert load_corpus(_write(tmp_path, [])) == []
    with pytest.raises(CorpusError, match="line 2"):
        load_corpus(_write(tmp_path, [json.dumps({"id": "a", "operator": "theta^4"}), "{not json"]))
    with pytest.raises(CorpusError, match="line 1"):
        load_corpus(_write(tmp_path, [json.dumps({"operator": "theta^4"})]))


def test_sample_corpus():
    recs = load_corpus(SAMPLE)
    assert [r.id for r in recs] == ["quintic", "AESZ-28", "AESZ-27", "AESZ-222", "AESZ-29", "AESZ-270"]
    for r in recs:
        assert r.to_operator().coeffs == parse_operator(OPERATORS[r.id]).coeffs


def test_structured_operator_matches_text():
    parts = [p for p in parse_operator(OPERATORS["AESZ-28"]).theta_parts()]
    op = operator_from_parts([[str(c) for c in p] for p in parts])
    assert op.coeffs == parse_operator(OPERATORS["AESZ-28"]).coeffs


def test_pipeline_aesz28():
    res = pipeline("AESZ-28")
    inv = res.invariants
    assert (inv["H3"], inv["c2H"], inv["c3"], inv["k"]) == (42, 84, -96, 14)
    assert res.genus1["5"] == "84"
    assert res.flags == []


def test_pipeline_no_conifold_candidate():
    res = run_pipeline(EquationRecord("x", NO_CONIFOLD), PipelineOptions(digits=30))
    assert res.flags == ["noConifoldCandidate"]
    assert res.invariants == {} and res.monodromy == {}


def test_pipeline_order3_is_input_error():
    with pytest.raises(InputError):
        run_pipeline(EquationRecord("x", "theta^3 - z*(theta+1)^3"))
    with pytest.raises(InputError):
        run_pipeline(EquationRecord("y", "theta^4 - (theta"))


def test_result_round_trip_and_determinism():
    opts = PipelineOptions(digits=50, order=12)
    rec = EquationRecord("quintic", OPERATORS["quintic"])
    a, b = run_pipeline(rec, opts), run_pipeline(rec, opts)
    assert a.to_json() == b.to_json()
    assert ResultRecord.from_json(a.to_json()) == a


def test_doubled_precision_keeps_integer_fields():
    rec = EquationRecord("quintic", OPERATORS["quintic"])
    lo = run_pipeline(rec, PipelineOptions(digits=50, order=12))
    hi = run_pipeline(rec, PipelineOptions(digits=100, order=12))
    assert lo.invariants == hi.invariants
    assert lo.monodromy == hi.monodromy
    assert lo.genus0 == hi.genus0 and lo.genus1 == hi.genus1
    assert lo.pl == hi.pl


def test_report_quintic_row():
    res = pipeline("quintic")
    text = emit_report([res], "table")
    lines = text.splitlines()
    assert len(lines) == 2
    assert lines[1].split()[1:6] == ["quintic", "5", "50", "-200", "5"]


def test_report_empty_is_header_only():
    text = emit_report([], "table")
    assert text.splitlines() == [text.splitlines()[0]]
    assert text.split()[:2] == ["group", "id"]
    assert emit_report([], "machine") == ""


def test_report_groups_equal_invariants():
    def fake(rid, H3, c2H, g0):
        return ResultRecord(rid, invariants={"H3": H3, "c2H": c2H, "k": 1, "c3": None}, genus0=g0)

    rows = [fake("b", 42, 84, {"1": "210"}), fake("a", 42, 84, {"1": "210"}), fake("q", 5, 50, {"1": "2875"})]
    body = emit_report(rows, "table").splitlines()[1:]
    assert [line.split()[1] for line in body] == ["q", "a", "b"]
    assert body[1].split()[0] == body[2].split()[0] == "G2*"
    assert body[0].split()[0] == "G1"


def test_machine_report_is_exact(tmp_path):
    res = pipeline("AESZ-28")
    line = emit_report([res], "machine")
    obj = json.loads(line)
    assert obj["monodromy"]["1"][0] == ["37", "12", "-252", "156"]
    assert all(isinstance(v, str) for v in obj["genus0"].values())


def test_main_machine_output(tmp_path):
    corpus = _write(tmp_path, [json.dumps({"id": "quintic", "operator": OPERATORS["quintic"]})])
    out = tmp_path / "out.jsonl"
    rc = main(["run", str(corpus), "--digits", "50", "--order", "8", "--format", "machine", "--output", str(out)])
    assert rc == 0
    rec = ResultRecord.from_json(out.read_text().strip())
    assert rec.invariants["c3"] == -200


def test_main_table_via_module(tmp_path):
    corpus = _write(tmp_path, [json.dumps({"id": "x", "operator": NO_CONIFOLD})])
    proc = subprocess.run([sys.executable, "-m", "cymonodromy", "run", str(corpus), "--digits", "30",
                           "--skip-genus1"], capture_output=True, text=True, check=True)
    assert "noConifoldCandidate" in proc.stdout


def test_main_reports_bad_corpus(tmp_path, capsys):
    corpus = _write(tmp_path, ["[1, 2]"])
    assert main(["run", str(corpus)]) == 2
    assert "line 1" in capsys.readouterr().err
