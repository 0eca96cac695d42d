import json

import pytest

from alglab import catalog, cli
from alglab.commutators import Commutator
from alglab.errors import ValidationError
from alglab.io import (
    algebra_from_dict,
    algebra_to_dict,
    load_algebra,
    load_variety,
    parse_subobject,
    split_generators,
)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, (json.loads(out) if out else None), err


Z3 = {
    "name": "Z3",
    "elements": ["0", "1", "2"],
    "unit": "0",
    "operations": {
        "mul": {"arity": 2, "table": [["0", "1", "2"], ["1", "2", "0"], ["2", "0", "1"]]},
        "inv": {"arity": 1, "table": ["0", "2", "1"]},
    },
}


@pytest.mark.parametrize("name", catalog.ALGEBRA_NAMES)
def test_algebra_dict_round_trip(name):
    A = catalog.algebra(name)
    again = algebra_from_dict(json.loads(json.dumps(algebra_to_dict(A))))
    assert again.key == A.key


def test_missing_constant_is_added():
    A = algebra_from_dict(Z3)
    assert A.signature.symbols == ("mul", "inv", "1")
    assert A.unit == 0


def test_algebra_errors_name_the_source():
    bad = json.loads(json.dumps(Z3))
    bad["operations"]["mul"]["table"][1][1] = "7"
    with pytest.raises(ValidationError, match=r"z3\.json: table of 'mul' names unknown element '7'"):
        algebra_from_dict(bad, source="z3.json")
    bad = dict(Z3, unit="9")
    with pytest.raises(ValidationError, match="unit '9'"):
        algebra_from_dict(bad, source="z3.json")
    with pytest.raises(ValidationError, match="missing field 'elements'"):
        algebra_from_dict({"unit": "0", "operations": {}}, source="z3.json")


def test_load_from_files(tmp_path):
    p = tmp_path / "z3.json"
    p.write_text(json.dumps(Z3))
    A = load_algebra(str(p))
    assert A.size == 3
    B = load_variety("ab", A)
    assert B.name == "ab"
    v = tmp_path / "comm.json"
    v.write_text(json.dumps({"name": "comm",
                             "identities": [{"lhs": "mul(x0, x1)", "rhs": "mul(x1, x0)"}]}))
    assert load_variety(str(v), A).name == "comm"
    (tmp_path / "broken.json").write_text("{")
    with pytest.raises(ValidationError, match="broken.json: invalid JSON"):
        load_algebra(str(tmp_path / "broken.json"))
    with pytest.raises(ValidationError, match="missing.json: no such file"):
        load_algebra(str(tmp_path / "missing.json"))


def test_variety_signature_mismatch():
    with pytest.raises(ValidationError, match="gp-in-loops"):
        load_variety("gp-in-loops", catalog.algebra("S3"))


def test_subobject_syntax():
    S3 = catalog.algebra("S3")
    assert len(parse_subobject(S3, "all")) == 6
    assert len(parse_subobject(S3, "1")) == 1
    assert len(parse_subobject(S3, "(12)")) == 6
    assert len(parse_subobject(S3, "(123), (132)")) == 3
    assert split_generators("(12),(13), x") == ["(12)", "(13)", "x"]
    with pytest.raises(ValidationError, match="'x'"):
        parse_subobject(S3, "x")
    Q8 = catalog.algebra("Q8")
    assert len(parse_subobject(Q8, "1")) == 1
    assert len(parse_subobject(Q8, "-1")) == 2


def test_commutator_command(capsys):
    code, rep, _ = run_json(capsys, "commutator", "-A", "s3", "-B", "ab",
                            "-M", "(123)", "-N", "(123)", "--method", "categorical")
    assert code == 0
    assert rep["results"]["commutator"] == ["e"]
    assert rep["inputs"]["M"] == ["e", "(123)", "(132)"]
    assert rep["command"][:2] == ["alglab", "commutator"]


def test_cross_check_s3(capsys):
    code, rep, _ = run_json(capsys, "commutator", "-A", "s3", "-B", "ab", "-M", "all", "-N", "all",
                            "--cross-check")
    assert code == 0
    assert rep["results"]["agreement"] is True
    for method in cli.METHODS:
        assert rep["cross_check"][method]["value"] == ["e", "(123)", "(132)"]


def test_loop_commutator(capsys):
    code, rep, _ = run_json(capsys, "commutator", "-A", "l5", "-B", "gp-in-loops",
                            "-M", "all", "-N", "all")
    assert code == 0
    assert rep["results"]["commutator"] == ["1", "a", "b", "c", "d"]


@pytest.mark.parametrize("method", cli.METHODS)
def test_each_method_on_q8(capsys, method):
    code, rep, _ = run_json(capsys, "commutator", "-A", "Q8", "-B", "ab", "-M", "i", "-N", "all",
                            "--method", method)
    assert code == 0
    assert rep["results"]["commutator"] == ["1", "-1"]


def test_flags_before_the_command(capsys):
    code, rep, _ = run_json(capsys, "-A", "d4", "-B", "ab", "radical")
    assert code == 0
    assert rep["results"]["radical"] == ["e", "r2"]


def test_central_command(capsys):
    code, rep, _ = run_json(capsys, "central", "-A", "q8", "-B", "ab", "--quotient-by", "-1")
    assert code == 0
    assert rep["results"]["central"] is True
    assert rep["results"]["split"] is False
    code, rep, _ = run_json(capsys, "central", "-A", "s3", "-B", "ab", "--quotient-by", "(123)")
    assert rep["results"]["central"] is False
    assert rep["results"]["split"] is True


def test_central_from_map_file(capsys, tmp_path):
    m = tmp_path / "map.json"
    m.write_text(json.dumps({"target": "Z2", "map": {"0": "0", "1": "1", "2": "0", "3": "1"}}))
    code, rep, _ = run_json(capsys, "central", "-A", "z4", "-B", "ab", "--map", str(m))
    assert code == 0
    assert rep["results"]["kernel"] == ["0", "2"]
    assert rep["results"]["central"] is True
    m.write_text(json.dumps({"target": "Z2", "map": {"0": "0", "1": "1", "2": "1", "3": "1"}}))
    code, _, err = run_json(capsys, "central", "-A", "z4", "-B", "ab", "--map", str(m))
    assert code == 2
    assert "map.json" in err


def test_radical_reflect_inspect(capsys):
    code, rep, _ = run_json(capsys, "radical", "-A", "s3", "-B", "ab")
    assert rep["results"]["radical"] == ["e", "(123)", "(132)"]
    code, rep, _ = run_json(capsys, "reflect", "-A", "z4", "-B", "ab")
    assert rep["results"]["is_isomorphism"] is True
    assert rep["results"]["reflection"]["size"] == 4
    code, rep, _ = run_json(capsys, "inspect", "-A", "klein4", "-B", "ab")
    assert len(rep["results"]["normal_subobjects"]) == 5
    assert len(rep["results"]["congruences"]) == 5
    assert rep["results"]["in_variety"] is True


def test_double_central_and_threefold(capsys):
    code, rep, _ = run_json(capsys, "double-central", "-A", "d4", "-B", "ab", "-M", "r", "-N", "r2")
    assert code == 0
    assert rep["results"]["double_central"] is True
    assert rep["cross_check"]["smith"]["agrees"] is True
    code, rep, _ = run_json(capsys, "threefold", "-A", "klein4", "-J", "11", "-M", "10", "-N", "01")
    assert code == 0
    assert rep["results"]["threefold"] is False


def test_text_output(capsys):
    code, out, _ = run(capsys, "radical", "-A", "s3", "-B", "ab", "--emit", "text")
    assert code == 0
    assert "radical: {e, (123), (132)}" in out


def test_validation_exit_code(capsys):
    code, out, err = run(capsys, "commutator", "-A", "s3", "-B", "ab", "-M", "(99)", "-N", "all")
    assert code == 2
    assert out == ""
    assert "'(99)'" in err
    code, _, err = run(capsys, "commutator", "-A", "l5", "-B", "nil2", "-M", "all", "-N", "all")
    assert code == 2
    assert "nil2" in err
    code, _, err = run(capsys, "commutator", "-A", "s3", "-B", "ab", "-N", "all")
    assert code == 2 and "-M" in err


def test_bound_exit_code(capsys):
    code, _, err = run(capsys, "inspect", "-A", "z12", "--bound", "8")
    assert code == 4
    assert "Z12" in err


def test_cross_check_failure_exit_code(capsys, monkeypatch):
    def wrong(A, M, N):
        return Commutator(A, frozenset(range(A.size)), frozenset([A.unit]), "smith")

    monkeypatch.setattr(cli, "commutator_from_smith", wrong)
    code, rep, _ = run_json(capsys, "commutator", "-A", "s3", "-B", "ab", "-M", "all", "-N", "all",
                            "--cross-check")
    assert code == 3
    assert rep["cross_check"]["smith"]["agrees"] is False
    assert rep["results"]["agreement"] is False


def test_reports_are_deterministic(capsys):
    argv = ["commutator", "-A", "d4", "-B", "nil2", "-M", "all", "-N", "all", "--cross-check"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    assert "timing" not in json.loads(first)
    _, timed, _ = run(capsys, *argv, "--timing")
    assert "timing" in json.loads(timed)


def test_suite_command(capsys):
    code, rep, _ = run_json(capsys, "suite", "--quick", "--only", "remark3.9",
                            "--only", "furtado-coelho")
    assert code == 0
    fams = [f["family"] for f in rep["results"]["families"]]
    assert fams == ["trivial-variety-witness", "furtado-coelho"]
    assert rep["results"]["failed_families"] == 0
    code, out, _ = run(capsys, "suite", "--quick", "--only", "word-formula", "--emit", "text")
    assert code == 0
    assert all(line.startswith("PASS word-formula") for line in out.splitlines())
    code, _, err = run(capsys, "suite", "--only", "nope")
    assert code == 2 and "nope" in err
