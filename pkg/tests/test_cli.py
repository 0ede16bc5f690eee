import json

import pytest

from cdbqc.cli import EXIT_CONFIG, EXIT_OK, main


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_count_flows_formula(capsys):
    assert main(["count-flows", "--rows", "2", "--cols", "2"]) == EXIT_OK
    doc = _json(capsys)
    assert doc["count"] == "9"


def test_count_flows_enumerate(capsys):
    assert main(["count-flows", "--rows", "2", "--cols", "3", "--method", "enumerate"]) == EXIT_OK
    assert _json(capsys)["count"] == "36"


def test_count_flows_large_formula(capsys):
    assert main(["count-flows", "--rows", "8", "--cols", "8", "--method", "all"]) == EXIT_OK
    doc = _json(capsys)
    assert int(doc["counts"]["formula"]) == int(doc["counts"]["product"])
    assert "enumerate" not in doc["counts"]
    assert doc["bits_per_qubit"] == pytest.approx(1.2636, abs=1e-4)


def test_enumeration_cap_exit(monkeypatch, capsys):
    monkeypatch.setenv("CDBQC_ENUM_CAP", "4")
    assert main(["count-flows", "--rows", "2", "--cols", "3", "--method", "enumerate"]) == EXIT_CONFIG


def test_enumerate_flows_to_file(tmp_path):
    out = tmp_path / "cat.json"
    assert main(["enumerate-flows", "--rows", "2", "--cols", "2", "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["count"] == 9


def test_run_twice_is_byte_identical(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert main(["run", "--rows", "2", "--cols", "3", "--seed", "17", "--out", str(p)]) == EXIT_OK
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_run_empty_flow(capsys):
    assert main(["run", "--rows", "2", "--cols", "2", "--flow", "0", "--angles", "1,1,1,1", "--seed", "3"]) == EXIT_OK
    doc = _json(capsys)
    assert len(doc["output"]) == 4
    assert len(doc["transcript"]["rounds"]) == 4


def test_run_constant_zero(capsys):
    assert main(["run", "--rows", "2", "--cols", "2", "--seed", "3", "--bob", "constant-0"]) == EXIT_OK
    doc = _json(capsys)
    assert all(r["b_prime"] == 0 for r in doc["transcript"]["rounds"])


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--rows", "2", "--cols", "2", "--seed", "1", "--angles", "0"],
        ["run", "--rows", "2", "--cols", "2", "--seed", "1", "--flow", "9"],
        ["run", "--rows", "2", "--cols", "2", "--seed", "1", "--bob", "nobody"],
        ["run", "--rows", "0", "--cols", "2", "--seed", "1"],
        ["run", "--rows", "2", "--cols", "2", "--seed", "1", "--angles", "1,x"],
    ],
)
def test_run_config_errors(argv):
    assert main(argv) == EXIT_CONFIG


def test_analyze_line(capsys, tmp_path):
    csv_path = tmp_path / "joint.csv"
    assert main(["analyze", "--rows", "1", "--cols", "2", "--joint-csv", str(csv_path)]) == EXIT_OK
    doc = _json(capsys)
    assert doc["report"]["h_secret"] == pytest.approx(5.0)
    assert doc["bounds"]["ok"]
    assert csv_path.read_text().startswith("b_prime,alpha_prime,alpha,flow,probability")


def test_analyze_point_prior(capsys):
    argv = ["analyze", "--rows", "2", "--cols", "2", "--prior", "point", "--flow", "4", "--angles", "1,3,5,7"]
    assert main(argv) == EXIT_OK
    doc = _json(capsys)
    assert doc["report"]["h_transcript_given_secret"] >= 4 - 1e-9


def test_analyze_2x2_constant_zero(capsys):
    assert main(["analyze", "--rows", "2", "--cols", "2", "--bob", "constant-0"]) == EXIT_OK
    assert _json(capsys)["report"]["h_secret"] == pytest.approx(11.1699, abs=1e-4)


def test_check_ambiguity_2x2(tmp_path, capsys):
    tr = tmp_path / "t.json"
    main(["run", "--rows", "2", "--cols", "2", "--seed", "5", "--out", str(tr)])
    capsys.readouterr()
    assert main(["check-ambiguity", str(tr)]) == EXIT_OK
    doc = _json(capsys)
    assert [row["witnesses"] for row in doc["flows"]] == [16] * 9


def test_check_ambiguity_line(tmp_path, capsys):
    tr = tmp_path / "t.json"
    main(["run", "--rows", "1", "--cols", "2", "--seed", "5", "--out", str(tr)])
    capsys.readouterr()
    assert main(["check-ambiguity", str(tr)]) == EXIT_OK
    assert [row["witnesses"] for row in _json(capsys)["flows"]] == [4, 4]


def test_check_ambiguity_truncated(tmp_path):
    tr = tmp_path / "t.json"
    main(["run", "--rows", "2", "--cols", "2", "--seed", "5", "--out", str(tr)])
    doc = json.loads(tr.read_text())
    doc["rounds"].pop()
    tr.write_text(json.dumps(doc))
    assert main(["check-ambiguity", str(tr)]) == EXIT_CONFIG
    tr.write_text("{not json")
    assert main(["check-ambiguity", str(tr)]) == EXIT_CONFIG
