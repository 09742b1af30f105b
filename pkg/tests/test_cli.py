import json

import pytest

import cli
from conftest import CORPUS, load_fixture

MODEL = str(CORPUS / "models" / "chain2_modal.model")


def test_classify(capsys):
    assert cli.main(["classify", "--sig", "basic_modal", "--expr", "box(p) <= p"]) == 0
    assert capsys.readouterr().out.startswith("very-simple-sahlqvist")


def test_structured_alba(capsys):
    assert cli.main(["alba", "--sig", "basic_modal", "--expr", "box(p) <= p", "--emit", "structured"]) == 0
    payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert payload["command"] == "alba"
    assert payload["result"]["input"] == "box(p) <= p"
    assert "trace" not in payload["result"]


def test_structured_trace_lines(capsys):
    code = cli.main(["alba", "--sig", "basic_modal", "--expr", "box(p) <= box(box(p))",
                     "--emit", "structured", "--trace"])
    assert code == 0
    *records, last = capsys.readouterr().out.strip().splitlines()
    steps = [json.loads(line)["step"] for line in records]
    assert steps == list(range(1, len(records) + 1))
    assert json.loads(last)["result"]["flags"] == []


def test_input_file(tmp_path, capsys):
    path = tmp_path / "input.txt"
    path.write_text("box(p) <= box(box(p))\n", encoding="utf-8")
    assert cli.main(["to-kracht", "--sig", "basic_modal", "--in", str(path)]) == 0
    assert capsys.readouterr().out.strip().startswith("A ")


def test_inverse_flags(capsys):
    text = next(c for c in load_fixture("inverse") if c["name"] == "full_lambek")["input"]
    code = cli.main(["inverse", "--sig", "lambek", "--expr", text, "--no-polarity-check"])
    assert code == 0
    out = capsys.readouterr().out
    assert "very simple:" in out and "flags: no-L-equivalent-found" in out


def test_inverse_second_goranko(capsys):
    text = next(c for c in load_fixture("inverse") if c["name"] == "second_goranko")["input"]
    assert cli.main(["inverse", "--sig", "basic_modal", "--expr", text]) == 0
    out = capsys.readouterr().out
    assert "very simple:" in out and "flags:" not in out


@pytest.mark.parametrize("argv, code", [
    (["classify", "--sig", "basic_modal", "--expr", "box(p <= p"], 2),
    (["classify", "--sig", "basic_modal", "--expr", "nope(p) <= p"], 2),
    (["alba", "--sig", "basic_modal", "--expr", "box(dia(p)) <= dia(box(p))"], 3),
    (["classify", "--sig", "no_such_logic", "--expr", "p <= p"], 2),
    (["classify", "--sig", "basic_modal", "--in", "/nonexistent/input.txt"], 2),
    (["check", "--sig", "basic_modal", "--expr", "p <= p"], 2),
])
def test_exit_codes(capsys, argv, code):
    assert cli.main(argv) == code
    assert "error:" in capsys.readouterr().err


def test_check_against_model(capsys):
    base = ["check", "--sig", "basic_modal", "--model", MODEL]
    assert cli.main([*base, "--expr", "box(p) <= p", "--against", "p <= dia(p)"]) == 0
    assert capsys.readouterr().out.strip().endswith("equivalent")
    assert cli.main([*base, "--expr", "dia(p) <= bot", "--against", "p <= p"]) == 1
    assert "separated by chain2_identity" in capsys.readouterr().out


def test_roundtrip_exit(capsys):
    assert cli.main(["roundtrip", "--sig", "basic_modal", "--expr", "box(p) <= p", "--seed", "4"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_structured_roundtrip_is_byte_identical(capsys):
    argv = ["roundtrip", "--sig", "basic_modal", "--expr", "p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))",
            "--emit", "structured", "--trace", "--seed", "5"]
    assert cli.main(argv) == 0
    first = capsys.readouterr().out
    assert cli.main(argv) == 0
    assert capsys.readouterr().out == first
    assert json.loads(first.strip().splitlines()[-1])["result"]["ok"]


def test_missing_signature_flag():
    with pytest.raises(SystemExit) as exc:
        cli.main(["classify", "--expr", "p <= p"])
    assert exc.value.code == 2
