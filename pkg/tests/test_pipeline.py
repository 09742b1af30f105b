import pytest

from conftest import CORPUS, load_fixture
from core.exceptions import NotFoundException, NotLInequalityException, ParseException
from services import pipeline
from services.syntax import alpha_equivalent, parse

INDUCTIVE = load_fixture("inductive")
CORPUS_ITEMS = [(s, t) for s, items in INDUCTIVE.items() for t in items]


@pytest.mark.parametrize("signature, text", CORPUS_ITEMS)
def test_roundtrip_corpus(sigs, settings, signature, text):
    report = pipeline.roundtrip(sigs[signature], text, settings)
    assert [s.stage for s in report.stages] == ["alba", "kracht", "very-simple", "inductive"]
    assert report.ok, [(s.stage, s.separating) for s in report.stages if not s.equivalent]


def test_roundtrip_trace(basic_modal, small_settings):
    report = pipeline.roundtrip(basic_modal, "box(p) <= box(box(p))", small_settings, trace=True)
    assert [r.step for r in report.trace] == list(range(1, len(report.trace) + 1))
    stages = {r.stage for r in report.trace}
    assert {"approximation", "ackermann", "compaction", "pivotal"} <= stages


def test_resolve_signature(settings):
    assert pipeline.resolve_signature("basic_modal", settings).has("pdia")
    assert pipeline.resolve_signature("lambek.sig", settings).has("fus")
    assert pipeline.resolve_signature(str(CORPUS / "signatures" / "tense.sig"), settings).has("pbox")
    inline = pipeline.resolve_signature("f dia 1 (1)\ng box 1 (1)", settings)
    assert inline.has("dia#1")
    with pytest.raises(NotFoundException):
        pipeline.resolve_signature("no_such_logic", settings)


def test_list_signatures(settings):
    assert pipeline.list_signatures(settings) == ["basic_modal", "lambek", "tense", "triangles"]


def test_classify_reports(basic_modal):
    report = pipeline.classify(basic_modal, "box(p) <= p")
    assert report.label == "very-simple-sahlqvist"
    assert report.witnesses[0].epsilon == {"p": "d"}
    crypto = pipeline.classify(basic_modal, "pdia(p) <= box(p)")
    assert crypto.summary.endswith("not crypto-inductive") and crypto.crypto is None
    pure = pipeline.classify(basic_modal, "#j <= dia(p)")
    assert not pure.l_inequality and pure.label is None


def test_classify_text_lists_every_witness(basic_modal):
    report = pipeline.classify(basic_modal, "dia(p /\\ q) <= q \\/ box(dia(box(dia(p))))")
    lines = pipeline.text_report(report).splitlines()
    assert lines[0] == report.summary
    assert lines[1:] == [f"witness: {w.text}  [{w.label}]" for w in report.witnesses]
    assert any(w.epsilon["q"] == "d" for w in report.witnesses)


def test_alba_report(basic_modal):
    report = pipeline.alba(basic_modal, "box(p) <= p", trace=True)
    expected = parse("A m:conom. box(*m) <= *m", basic_modal)
    assert alpha_equivalent(parse(report.output, basic_modal), expected)
    assert report.trace and report.preprocessed == ["box(p) <= p"]


def test_to_kracht_needs_base_l_inequality(basic_modal):
    with pytest.raises(NotLInequalityException):
        pipeline.to_kracht(basic_modal, "pdia(p) <= p")
    with pytest.raises(NotLInequalityException):
        pipeline.to_kracht(basic_modal, "#j <= dia(p)")
    assert len(pipeline.to_kracht(basic_modal, "box(p) <= box(box(p))", refined=True).pieces) == 1


def test_to_kracht_trace(basic_modal):
    report = pipeline.to_kracht(basic_modal, "box(p) <= box(box(p))", refined=True, trace=True)
    assert [r.step for r in report.trace] == list(range(1, len(report.trace) + 1))
    assert [r.rule for r in report.trace][-2:] == ["kracht-form", "refine"]
    assert report.trace[-1].after == report.pieces[0]
    assert "ackermann" in {r.stage for r in report.trace}
    assert pipeline.to_kracht(basic_modal, "box(p) <= box(box(p))").trace == []


def test_inverse_report(lambek):
    case = next(c for c in load_fixture("inverse") if c["name"] == "full_lambek")
    report = pipeline.inverse(lambek, case["input"], enforce_polarity=False)
    assert report.inductive is None and report.flags == ["no-L-equivalent-found"]
    assert "flags: no-L-equivalent-found" in pipeline.text_report(report)


def test_check_on_battery(basic_modal, small_settings):
    report = pipeline.check(basic_modal, "box(p) <= p", "A m:conom. box(*m) <= *m", small_settings)
    assert report.equivalent and not report.separating
    assert len(report.models) == 5 + small_settings.battery_random_models


def test_check_against_model_dump(basic_modal, settings):
    model = (CORPUS / "models" / "chain2_modal.model").read_text(encoding="utf-8")
    report = pipeline.check(basic_modal, "dia(p) <= bot", "p <= p", settings, model_text=model)
    assert not report.equivalent and report.separating == ["chain2_identity"]
    assert report.models[0].counterexample == {"p": "{1}"}
    assert "separated by chain2_identity" in pipeline.text_report(report)


def test_check_rejects_terms(basic_modal, settings):
    with pytest.raises(ParseException):
        pipeline.check(basic_modal, "p /\\ q", "p <= p", settings)
