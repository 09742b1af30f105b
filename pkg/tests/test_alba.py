import pytest

from conftest import load_fixture
from core.exceptions import (
    NotInAckermannShapeException,
    NotInductiveException,
    NotPIAException,
    RuleNotApplicableException,
)
from services.alba import (
    Mode,
    QuasiInequality,
    ackermann_eliminate,
    apply_approximation,
    apply_residuation,
    first_approximation,
    la_ra,
    minimal_valuations,
    preprocess,
    run_alba,
    simplify_constants,
)
from services.classifier import find_inductive
from services.oracle import equivalent
from services.signature import Polarity
from services.syntax import (
    BOT,
    TOP,
    App,
    Conominal,
    Inequality,
    Meet,
    MImp,
    Nominal,
    PropVar,
    alpha_equivalent,
    is_pure,
    meta_terms,
    parse_inequality,
    parse_meta,
    parse_term,
)
from services.trace import Trace

FORWARD = load_fixture("forward")
INDUCTIVE = load_fixture("inductive")
CORPUS = [(s, t) for s, items in INDUCTIVE.items() for t in items]


@pytest.mark.parametrize("case", FORWARD, ids=[c["name"] for c in FORWARD])
def test_forward_outputs(sigs, case):
    sig = sigs[case["signature"]]
    run = run_alba(parse_inequality(case["input"], sig), sig)
    assert alpha_equivalent(run.output, parse_meta(case["output"], sig))


@pytest.mark.parametrize("case", FORWARD, ids=[c["name"] for c in FORWARD])
def test_forward_outputs_agree_on_battery(sigs, batteries, settings, case):
    sig = sigs[case["signature"]]
    ineq = parse_inequality(case["input"], sig)
    assert equivalent(batteries[case["signature"]], ineq, run_alba(ineq, sig).output, settings)


@pytest.mark.parametrize("signature, text", CORPUS)
def test_corpus_outputs_are_pure_and_equivalent(sigs, batteries, settings, signature, text):
    sig = sigs[signature]
    ineq = parse_inequality(text, sig)
    run = run_alba(ineq, sig, trace=False)
    assert all(is_pure(t) for t in meta_terms(run.output))
    assert equivalent(batteries[signature], ineq, run.output, settings)


def test_transitivity_uses_antitone_witness(basic_modal):
    run = run_alba(parse_inequality("box(p) <= box(box(p))", basic_modal), basic_modal)
    assert run.witness.epsilon == {"p": Polarity.NEGATIVE}
    assert run.flags == []
    assert len(run.reductions) == 1


def test_goranko_trace(basic_modal):
    ineq = parse_inequality("p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))", basic_modal)
    run = run_alba(ineq, basic_modal)
    rules = run.trace.rules()
    assert rules[0] == "first-approximation"
    assert rules.count("RAR") == 2
    assert "reverse-approximation" in rules
    assert all(r.step == n for n, r in enumerate(run.trace, start=1))


def test_trace_can_be_disabled(basic_modal):
    run = run_alba(parse_inequality("box(p) <= p", basic_modal), basic_modal, trace=False)
    assert len(run.trace) == 0


def test_not_inductive(basic_modal):
    with pytest.raises(NotInductiveException):
        run_alba(parse_inequality("box(dia(p)) <= dia(box(p))", basic_modal), basic_modal)


def test_preprocess_distributes_and_splits(basic_modal):
    trace = Trace()
    items = preprocess(parse_inequality("dia(p \\/ q) <= p \\/ q", basic_modal), trace=trace)
    assert items == [parse_inequality("dia(p) <= p", basic_modal), parse_inequality("dia(q) <= q", basic_modal)]
    assert {"distribution", "splitting", "uniform-elimination"} <= set(trace.rules())


def test_preprocess_drops_uniform_variables(basic_modal):
    items = preprocess(parse_inequality("p /\\ q <= dia(p)", basic_modal))
    assert items == [parse_inequality("p <= dia(p)", basic_modal)]


def test_preprocess_splits_meets_on_the_right(basic_modal):
    items = preprocess(parse_inequality("box(p) <= p /\\ box(box(p))", basic_modal))
    assert len(items) == 2


def test_simplify_constants(basic_modal):
    dia, box = basic_modal.lookup("dia"), basic_modal.lookup("box")
    assert simplify_constants(App(dia, (BOT,))) == BOT
    assert simplify_constants(App(box, (TOP,))) == TOP
    assert simplify_constants(Meet(PropVar("p"), TOP)) == PropVar("p")


def test_first_approximation(basic_modal):
    quasi = first_approximation(parse_inequality("box(p) <= p", basic_modal))
    j, m = Nominal("j1"), Conominal("m1")
    assert quasi.consequent == Inequality(j, m)
    assert quasi.antecedent[0].lhs == j and quasi.antecedent[1].rhs == m
    assert isinstance(quasi.to_meta().body.body, MImp)


def test_la_ra_adjunction(basic_modal):
    box, dia = parse_term("box(p)", basic_modal), parse_term("dia(p)", basic_modal)
    j, m = Nominal("j"), Conominal("m")
    sol = la_ra(box, (0,), Mode.LA, basic_modal, j)
    assert sol.inequality() == Inequality(parse_term("pdia(#j)", basic_modal), PropVar("p"))
    sol = la_ra(dia, (0,), Mode.RA, basic_modal, m)
    assert sol.inequality() == Inequality(PropVar("p"), parse_term("pbox(*m)", basic_modal))
    with pytest.raises(NotPIAException):
        la_ra(dia, (0,), Mode.LA, basic_modal, j)


def test_la_ra_through_implication(basic_modal):
    t = parse_term("dia(p) -> q", basic_modal)
    sol = la_ra(t, (0, 0), Mode.LA, basic_modal, Nominal("j"))
    assert not sol.lower
    assert sol.inequality() == Inequality(PropVar("p"), parse_term("pbox(#j -> q)", basic_modal))


def test_la_ra_splitting_side_conditions(basic_modal):
    t = parse_term("box(p) /\\ q", basic_modal)
    sol = la_ra(t, (0, 0), Mode.LA, basic_modal, Nominal("j"))
    assert sol.side == (Inequality(Nominal("j"), PropVar("q")),)


def test_apply_residuation(basic_modal):
    out = apply_residuation(parse_inequality("dia(p) <= q", basic_modal), basic_modal)
    assert out == parse_inequality("p <= pbox(q)", basic_modal)
    with pytest.raises(RuleNotApplicableException):
        apply_residuation(parse_inequality("p <= q", basic_modal), basic_modal)


def test_apply_approximation(basic_modal):
    main, side = apply_approximation(parse_inequality("#j <= dia(box(p))", basic_modal))
    assert main == parse_inequality("#j <= dia(#j1)", basic_modal)
    assert side == parse_inequality("#j1 <= box(p)", basic_modal)
    with pytest.raises(RuleNotApplicableException):
        apply_approximation(parse_inequality("p <= dia(q)", basic_modal))


def test_ackermann(basic_modal):
    j, m, p = Nominal("j"), Conominal("m"), PropVar("p")
    dia = basic_modal.lookup("dia")
    system = QuasiInequality((Inequality(j, p), Inequality(App(dia, (p,)), m)), Inequality(j, m))
    out = ackermann_eliminate(system, "p", Polarity.POSITIVE)
    assert out.antecedent == (Inequality(App(dia, (j,)), m),)
    assert out.consequent == Inequality(j, m)
    bad = QuasiInequality((Inequality(j, p), Inequality(j, App(dia, (p,)))), Inequality(j, m))
    with pytest.raises(NotInAckermannShapeException):
        ackermann_eliminate(bad, "p", Polarity.POSITIVE)


def test_ackermann_consequent_takes_opposite_polarity(basic_modal):
    j, m, p = Nominal("j"), Conominal("m"), PropVar("p")
    dia = basic_modal.lookup("dia")
    weakening = QuasiInequality((Inequality(j, p),), Inequality(j, App(dia, (p,))))
    assert ackermann_eliminate(weakening, "p", Polarity.POSITIVE).consequent == Inequality(j, App(dia, (j,)))
    strengthening = QuasiInequality((Inequality(j, p),), Inequality(App(dia, (p,)), m))
    with pytest.raises(NotInAckermannShapeException):
        ackermann_eliminate(strengthening, "p", Polarity.POSITIVE)


def test_minimal_valuations(basic_modal):
    ineq = parse_inequality("box(p) <= p", basic_modal)
    valuations = minimal_valuations(ineq, find_inductive(ineq), basic_modal)
    assert valuations["p"].polarity is Polarity.NEGATIVE
    assert valuations["p"].aggregate == Conominal("m1")
