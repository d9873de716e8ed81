import csv
import json
import subprocess
import sys

import pytest

from soficdim.cli import (
    EXIT_INAPPLICABLE,
    EXIT_PARSE,
    EXIT_RESOLVING,
    EXIT_TRUNCATION,
    main,
)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def all_results(doc):
    return doc.get("results", []) + doc.get("extra_results", [])


def test_validate_graph(capsys):
    doc = run_json(capsys, "validate", "example1.graph")
    assert doc["valid"] is True
    assert doc["input"]["path"] == "bundled:example1.graph"
    assert doc["input"]["kind"] == "graph"
    assert doc["family"]["d"] == 2 and doc["family"]["n"] == 3
    assert doc["family"]["primitive_sum"] is False


def test_graph_and_matrix_inputs_agree(capsys):
    a = run_json(capsys, "validate", "example1.graph")
    b = run_json(capsys, "validate", "example1.matrix")
    assert a["family"]["fingerprint"] == b["family"]["fingerprint"]


def test_bare_name_resolves(capsys):
    doc = run_json(capsys, "validate", "example3")
    assert doc["input"]["path"].startswith("bundled:example3")


def test_right_resolving_violation_exit_code(capsys):
    code, out, err = run(capsys, "validate", "bad_labels.graph")
    assert code == EXIT_RESOLVING
    assert out == ""
    assert "right-resolving" in err or "label" in err


def test_missing_file_exit_code(capsys):
    code, _, err = run(capsys, "validate", "no_such_file.graph")
    assert code == EXIT_PARSE
    assert "example1.graph" in err


def test_malformed_input_exit_code(tmp_path, capsys):
    p = tmp_path / "broken.matrix"
    p.write_text("dim 2\nm 2 3\nn 2\nmatrix 0\n1 x\n0 1\n")
    code, _, err = run(capsys, "validate", str(p))
    assert code == EXIT_PARSE
    assert "line" in err


def test_wrong_dimension_is_inapplicable(capsys):
    assert run(capsys, "dim3", "example1")[0] == EXIT_INAPPLICABLE
    assert run(capsys, "dim2", "example3")[0] == EXIT_INAPPLICABLE


def test_no_rank1_string_is_inapplicable(tmp_path, capsys):
    p = tmp_path / "eye.matrix"
    p.write_text("dim 2\nm 2 3\nn 2\nmatrix 0\n1 0\n0 1\nmatrix 1\n1 0\n0 1\n")
    code, _, err = run(capsys, "dim2", str(p))
    assert code == EXIT_INAPPLICABLE
    assert err


def test_non_positive_option(capsys):
    assert run(capsys, "dim2", "example1", "--K", "0")[0] == 2


def test_truncation_error_exit_code(tmp_path, capsys):
    p = tmp_path / "slow.matrix"
    p.write_text(
        "dim 2\nm 2 3\nn 3\nmatrix 0\n0 0 0\n0 0 1\n1 0 0\nmatrix 1\n1 1 2\n2 0 1\n2 0 1\n"
    )
    code, _, err = run(capsys, "dim2", str(p), "--K", "12", "--kmax", "2")
    assert code == EXIT_TRUNCATION
    assert "truncation" in err


def test_dim2_json_document(capsys):
    doc = run_json(capsys, "dim2", "example1", "--kmax", "10")
    assert doc["schema"] == 1
    assert doc["command"] == "dim2"
    assert doc["example"] == "example1"
    dims = [r for r in doc["results"] if r["quantity"] == "dim"]
    assert dims[0]["value"] == pytest.approx(1.55713044, abs=1e-7)
    for rec in all_results(doc):
        assert rec["method"]
    assert doc["series"]["method"] == "enumerated-coefficients"
    assert all(b["method"] == "companion-bound" for b in doc["lower_bounds"])
    assert doc["structure"]["rank1_string"] == [0, 1]


def test_every_number_is_labeled(capsys):
    doc = run_json(capsys, "report", "example2", "--oracle-N", "5", "--kmax", "5")
    for rec in all_results(doc):
        assert set(rec) >= {"method", "quantity", "value"}
    assert doc["oracle"]["method"] == "oracle-extrapolation"
    assert "delta" in doc["oracle"]
    assert not any(r["method"].startswith("closed-form") for r in doc.get("extra_results", []))


def test_published_mismatch_is_flagged(capsys):
    doc = run_json(capsys, "dim2", "example1", "--kmax", "5")
    comps = [c for c in doc["comparisons"] if c["kind"] == "published-comparison"]
    assert {c["quantity"] for c in comps} == {"r", "dim"}
    assert all(not c["match"] and c["suspected"] for c in comps)
    assert doc["flags"]


def test_example3_matches_published_and_flags_third_coefficient(capsys):
    doc = run_json(capsys, "dim3", "example3", "--K", "30")
    comps = {c["quantity"]: c for c in doc["comparisons"] if c["kind"] == "published-comparison"}
    assert comps["r"]["match"] and comps["dim"]["match"]
    mism = [c for c in doc["comparisons"] if c["kind"] == "coefficient-mismatch"]
    assert len(mism) == 1 and mism[0]["index"] == 2
    assert mism[0]["published"] == pytest.approx(2 ** 0.5)


def test_json_output_is_deterministic(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}.json"
        assert main(["dim3", "example3", "--K", "20", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_csv_side_file(tmp_path, capsys):
    side = tmp_path / "series.csv"
    doc = run_json(capsys, "dim2", "example2", "--K", "12", "--kmax", "3", "--csv", str(side))
    rows = list(csv.reader(side.open()))
    assert rows[0] == ["k", "log_coefficient", "coefficient"]
    assert len(rows) == 14
    assert float(rows[1][1]) == pytest.approx(doc["series"]["log_coefficients"][0])


def test_text_format(capsys):
    code, out, _ = run(capsys, "dim3", "example3", "--K", "20", "--format", "text")
    assert code == 0
    assert "[return-series]" in out
    assert out.startswith("input  bundled:example3")


def test_oracle_command(capsys):
    doc = run_json(capsys, "oracle", "example3", "--N", "4")
    methods = {r["method"] for r in doc["results"]}
    assert methods == {"oracle-extrapolation", "oracle-raw"}
    assert len(doc["oracle"]["values"]) == 4


def test_closed_form_result(tmp_path, capsys):
    p = tmp_path / "diag.matrix"
    p.write_text("dim 2\nm 2 3\nn 2\nmatrix 0\n2 0\n0 1\nmatrix 1\n3 0\n0 1\n")
    doc = run_json(capsys, "oracle", str(p), "--N", "6")
    assert any(r["method"] == "closed-form-common-eigenvector" for r in doc["results"])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "soficdim", "validate", "example2"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["family"]["m"] == [3, 4]
