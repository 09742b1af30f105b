import pytest

from conftest import load_fixture
from core.exceptions import NotDefiniteInductiveException, NotKrachtException, NotStrippableException
from services.kracht import (
    QuantifierKind,
    from_meta,
    inductive_to_kracht,
    is_flat,
    kracht_pieces,
    refine,
    strip_flat,
    validate_kracht,
)
from services.oracle import equivalent
from services.syntax import Conominal, Kappa, Nominal, alpha_equivalent, free_pure_vars, meta_and, parse_inequality, parse_meta

CASES = {c["name"]: c for c in load_fixture("kracht")}


def test_transitivity_kracht_form(basic_modal):
    case = CASES["transitivity"]
    kf = inductive_to_kracht(parse_inequality(case["input"], basic_modal), basic_modal)
    assert alpha_equivalent(kf.to_meta(), parse_meta(case["kracht"], basic_modal))


def test_quantifier_kinds(basic_modal):
    kf = from_meta(parse_meta(CASES["transitivity"]["kracht"], basic_modal))
    assert [e.kind for e in kf.prefix] == [QuantifierKind.PIVOTAL, QuantifierKind.PIVOTAL,
                                           QuantifierKind.TYPE2, QuantifierKind.TYPE1]
    assert kf.pivots == (Nominal("j"), Conominal("m"))
    assert len(kf.disjuncts) == 1 and kf.disjuncts[0].main == Kappa(Nominal("j"))


def test_morecomplex_is_a_valid_equivalent(basic_modal, batteries, settings):
    ineq = parse_inequality(CASES["morecomplex"]["input"], basic_modal)
    forms = kracht_pieces(ineq, basic_modal)
    assert forms
    for kf in forms:
        validate_kracht(kf.to_meta())
    combined = meta_and(kf.to_meta() for kf in forms)
    assert equivalent(batteries["basic_modal"], ineq, combined, settings)


def test_refine_moves_pivot_out_of_consequent(basic_modal, batteries, settings):
    kf = from_meta(parse_meta(CASES["transitivity"]["kracht"], basic_modal))
    refined = refine(kf)
    assert Nominal("j") not in free_pure_vars(refined.consequent())
    assert refined.aliases == [Nominal("h1")]
    validate_kracht(refined.to_meta())
    assert equivalent(batteries["basic_modal"], kf.to_meta(), refined.to_meta(), settings)


def test_refine_keeps_alias_bounding_a_restricted_variable(lambek):
    case = next(c for c in load_fixture("inverse") if c["name"] == "full_lambek")
    refined = refine(from_meta(parse_meta(case["input"], lambek), enforce_polarity=False))
    assert Nominal("h1") in refined.aliases
    assert parse_inequality("#i1 <= #h1", lambek) in refined.antecedent
    validate_kracht(refined.to_meta(), enforce_polarity=False)


def test_refined_pieces(basic_modal):
    ineq = parse_inequality("box(p) <= box(box(p))", basic_modal)
    (kf,) = kracht_pieces(ineq, basic_modal, refined=True)
    j, _ = kf.pivots
    assert j not in free_pure_vars(kf.consequent())


def test_multiple_pieces(basic_modal):
    ineq = parse_inequality("box(p) <= p /\\ box(box(p))", basic_modal)
    assert len(kracht_pieces(ineq, basic_modal)) == 2
    with pytest.raises(NotDefiniteInductiveException):
        inductive_to_kracht(ineq, basic_modal)


@pytest.mark.parametrize("text, reason", [
    ("A j:nom. #j <= dia(#j)", "malformed"),
    ("A j:nom. A m:conom. [#j <= *m ==> box(*m) <= k(#j)]", "no-pivotal"),
    ("A j:nom. A m:conom. A n:conom. [#j !<= *m && #j !<= *n ==> box(*n) <= k(#j)]", "multi-pivotal"),
    ("A j:nom. A m:conom. A h:nom. [#j !<= *m ==> box(*m) <= k(#j)]", "alias-violation"),
    ("A j:nom. A m:conom. A h:nom. [#j <= #h && #j !<= *m ==> box(#h) <= k(#j)]", "polarity-violation"),
    ("A j:nom. A m:conom. [#j !<= *m ==> box(*n) <= k(#j)]", "non-inherently-universal-atom-var"),
    ("A j:nom. A m:conom. A[n:conom |> box *m]. A o:conom. [*o <= *n && #j !<= *m ==> box(*n) <= k(#j)]",
     "quantifier-type-violation"),
])
def test_validation_failures(basic_modal, text, reason):
    with pytest.raises(NotKrachtException) as info:
        validate_kracht(parse_meta(text, basic_modal))
    assert info.value.reason == reason


def test_polarity_can_be_relaxed(basic_modal):
    text = "A j:nom. A m:conom. A h:nom. [#j <= #h && #j !<= *m ==> box(#h) <= k(#j)]"
    kf = validate_kracht(parse_meta(text, basic_modal), enforce_polarity=False)
    assert kf.aliases == [Nominal("h")]


def test_strip_flat(basic_modal):
    out = strip_flat(parse_inequality("#j <= dia(box(*m))", basic_modal))
    assert out == parse_meta("E[i1:nom |> dia #j]. #i1 <= box(*m)", basic_modal)
    deeper = strip_flat(parse_inequality("#j <= dia(box(dia(*m)))", basic_modal))
    assert deeper == parse_meta("E[i1:nom |> dia #j]. A[n1:conom |> box k(#i1)]. l(*n1) <= dia(*m)", basic_modal)
    with pytest.raises(NotStrippableException):
        strip_flat(parse_inequality("p <= q", basic_modal))


def test_is_flat(basic_modal):
    assert is_flat(parse_inequality("#j <= dia(#i)", basic_modal))
    assert is_flat(parse_inequality("box(*n) <= k(#j)", basic_modal))
    assert not is_flat(parse_inequality("#j <= dia(box(#i))", basic_modal))
