import pytest

from conftest import load_fixture
from core.exceptions import NotLInequalityException
from services.classifier import (
    CriticalBranch,
    HoleKind,
    Label,
    Side,
    check_witness,
    classify_inequality,
    classify_tree,
    critical_branches,
    decompose,
    find_witnesses,
    is_crypto_inductive,
    is_good_branch,
    is_l_inequality,
    uniform_variables,
)
from services.signature import Polarity
from services.syntax import PropVar, Sign, parse, parse_inequality

FORWARD = load_fixture("forward")
INDUCTIVE = load_fixture("inductive")
INVERSE = load_fixture("inverse")


@pytest.mark.parametrize("case", FORWARD, ids=[c["name"] for c in FORWARD])
def test_labels(sigs, case):
    sig = sigs[case["signature"]]
    result = classify_inequality(parse_inequality(case["input"], sig))
    assert result.label.value == case["label"]


@pytest.mark.parametrize("signature, text", [(s, t) for s, items in INDUCTIVE.items() for t in items])
def test_corpus_is_inductive(sigs, signature, text):
    ineq = parse_inequality(text, sigs[signature])
    result = classify_inequality(ineq)
    assert result.label is not Label.NOT_INDUCTIVE
    assert all(check_witness(ineq, w) for w in result.witnesses)


@pytest.mark.parametrize("case", [c for c in INVERSE if c["very_simple_label"]], ids=lambda c: c["name"])
def test_very_simple_outputs_are_labelled(sigs, case):
    ineq = parse_inequality(case["very_simple"], sigs[case["signature"]])
    assert classify_inequality(ineq).label.value == case["very_simple_label"]


def test_reflexivity_witnesses(basic_modal):
    ineq = parse_inequality("box(p) <= p", basic_modal)
    witnesses = find_witnesses(ineq)
    assert [w.epsilon["p"] for w in witnesses] == [Polarity.NEGATIVE, Polarity.POSITIVE]
    assert [w.label for w in witnesses] == [Label.VERY_SIMPLE, Label.SAHLQVIST]
    assert classify_inequality(ineq).best == witnesses[0]


def test_decompose_reflexivity(basic_modal):
    ineq = parse_inequality("box(p) <= p", basic_modal)
    sahlqvist = find_witnesses(ineq)[1]
    d = decompose(ineq, sahlqvist)
    assert d.skeleton == parse_inequality("x1 <= w1", basic_modal)
    alpha = d.hole("x1")
    assert alpha.kind is HoleKind.ALPHA and alpha.side is Side.LEFT
    assert alpha.term == parse_inequality("box(p) <= p", basic_modal).lhs
    assert d.hole("w1").kind is HoleKind.DELTA


def test_mckinsey_is_not_inductive(basic_modal):
    ineq = parse_inequality("box(dia(p)) <= dia(box(p))", basic_modal)
    assert classify_inequality(ineq).label is Label.NOT_INDUCTIVE
    assert classify_inequality(ineq).best is None
    good = find_witnesses(parse_inequality("box(p) <= p", basic_modal))[0]
    forced = good.model_copy(update={"epsilon": {"p": Polarity.POSITIVE}})
    assert not check_witness(ineq, forced)


def test_pure_variables_are_rejected(basic_modal):
    ineq = parse_inequality("#j <= dia(p)", basic_modal)
    assert not is_l_inequality(ineq)
    with pytest.raises(NotLInequalityException):
        classify_inequality(ineq)


def test_omega_from_side_branches(basic_modal):
    ineq = parse_inequality("p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))", basic_modal)
    best = classify_inequality(ineq).best
    assert best.epsilon == {"p": Polarity.POSITIVE, "q": Polarity.POSITIVE}
    assert best.below("p", "q")
    assert best.elimination_order() == ["p", "q"]
    assert "p<q" in best.describe()


def test_uniform_variables(basic_modal):
    ineq = parse_inequality("box(p) <= box(box(q))", basic_modal)
    assert uniform_variables(ineq) == {"p": Sign.PLUS, "q": Sign.MINUS}
    assert uniform_variables(parse_inequality("box(p) <= p", basic_modal)) == {}


def test_critical_branches(basic_modal):
    ineq = parse_inequality("box(p) <= p", basic_modal)
    branches = critical_branches(ineq, {"p": Polarity.POSITIVE})
    assert branches == [CriticalBranch(Side.LEFT, (0,), "p", ((),))]
    assert [b.side for b in critical_branches(ineq, {"p": Polarity.NEGATIVE})] == [Side.RIGHT]


def test_crypto_inductive(basic_modal, tense):
    assert is_crypto_inductive(parse_inequality("dia(p) <= box(p)", basic_modal), basic_modal) is not None
    assert is_crypto_inductive(parse_inequality("pdia(p) <= box(p)", basic_modal), basic_modal) is None
    found = is_crypto_inductive(parse_inequality("pdia(p) <= box(p)", tense), tense)
    assert found is not None and found.label is Label.VERY_SIMPLE


def test_variable_of_leaf(basic_modal):
    d = decompose(parse_inequality("box(p) <= p", basic_modal),
                  find_witnesses(parse_inequality("box(p) <= p", basic_modal))[0])
    beta = d.of_kind(HoleKind.BETA)
    assert len(beta) == 1 and beta[0].term == PropVar("p")


@pytest.mark.parametrize("text, sign, leaf, good", [
    ("dia(box(p))", Sign.PLUS, (0, 0), True),
    ("box(dia(p))", Sign.PLUS, (0, 0), False),
    ("box(dia(p))", Sign.MINUS, (0, 0), True),
    ("dia(p) \\/ box(q)", Sign.PLUS, (1, 0), True),
    ("box(p /\\ dia(q))", Sign.PLUS, (0, 1, 0), False),
])
def test_good_branches(basic_modal, text, sign, leaf, good):
    assert is_good_branch(classify_tree(parse(text, basic_modal), sign), leaf) is good
