import pytest

from conftest import CORPUS
from core.config import Settings
from core.exceptions import (
    PosetTooLargeException,
    SignatureException,
    TooManyValuationsException,
    UnboundVariableException,
)
from services.oracle import (
    antichain_poset,
    build_battery,
    build_dle,
    chain_poset,
    counterexample,
    dump_model,
    evaluate,
    holds,
    load_model,
    valid_inequality,
    valid_meta,
    verdicts,
)
from services.syntax import PropVar, parse_inequality, parse_meta


@pytest.fixture(scope="module")
def identity(basic_modal, settings):
    text = (CORPUS / "models" / "chain2_modal.model").read_text(encoding="utf-8")
    return load_model(text, basic_modal, settings)


def test_battery_shape(basic_modal, settings):
    battery = build_battery(basic_modal, settings)
    assert battery.names()[:5] == ["chain2", "chain3", "chain4", "diamond", "cube"]
    assert len(battery) == 5 + settings.battery_random_models
    assert [m.size for m in battery.models[:5]] == [2, 3, 4, 4, 8]


def test_battery_is_deterministic(lambek, settings):
    first = [dump_model(m) for m in build_battery(lambek, settings, seed=3)]
    second = [dump_model(m) for m in build_battery(lambek, settings, seed=3)]
    assert first == second


def test_irreducibles(basic_modal, settings):
    model = build_dle(basic_modal, chain_poset(3), settings=settings)
    assert model.size == 4
    assert len(model.join_irreducibles) == len(model.meet_irreducibles) == 3
    assert model.top in model.elements and 0 in model.elements


@pytest.mark.parametrize("name", ["basic_modal", "lambek"])
def test_kappa_lambda_flip(batteries, name):
    for model in batteries[name]:
        for j in model.join_irreducibles:
            for a in model.elements:
                assert (not model.leq(j, a)) == model.leq(a, model.kappa(j))
        for m in model.meet_irreducibles:
            for a in model.elements:
                assert (not model.leq(a, m)) == model.leq(model.lambda_(m), a)


def test_modal_adjunctions(basic_modal, batteries):
    dia, pbox = basic_modal.lookup("dia"), basic_modal.lookup("pbox")
    box, pdia = basic_modal.lookup("box"), basic_modal.lookup("pdia")
    for model in batteries["basic_modal"]:
        for a in model.elements:
            for b in model.elements:
                assert model.leq(model.apply(dia, (a,)), b) == model.leq(a, model.apply(pbox, (b,)))
                assert model.leq(model.apply(pdia, (a,)), b) == model.leq(a, model.apply(box, (b,)))


def test_fusion_residuation(lambek, small_batteries):
    fus = lambek.lookup("fus")
    left, right = lambek.lookup("fus#1"), lambek.lookup("fus#2")
    for model in small_batteries["lambek"]:
        for a in model.elements:
            for b in model.elements:
                for c in model.elements:
                    below = model.leq(model.apply(fus, (a, b)), c)
                    assert below == model.leq(a, model.apply(left, (c, b)))
                    assert below == model.leq(b, model.apply(right, (a, c)))


def test_operators_are_normal(basic_modal, batteries):
    dia, box = basic_modal.lookup("dia"), basic_modal.lookup("box")
    for model in batteries["basic_modal"]:
        assert model.apply(dia, (0,)) == 0
        assert model.apply(box, (model.top,)) == model.top


def test_identity_model(basic_modal, identity):
    assert identity.name == "chain2_identity" and identity.size == 3
    for text in ("box(p) <= p", "p <= dia(p)", "dia(p) <= box(p)", "dia(dia(p)) <= dia(p)"):
        assert valid_inequality(identity, parse_inequality(text, basic_modal))
    refuted = parse_inequality("dia(p) <= bot", basic_modal)
    assert not holds(identity, refuted)
    assert counterexample(identity, refuted) == {"p": "{1}"}


def test_meta_formulas(basic_modal, identity):
    assert valid_meta(identity, parse_meta("A j:nom. A m:conom. [#j !<= *m || *m !<= *m || #j <= *m]", basic_modal))
    assert not valid_meta(identity, parse_meta("A j:nom. E m:conom. #j <= *m", basic_modal))
    assert valid_meta(identity, parse_meta("A j:nom. E[i:nom |> dia #j]. #i <= #j", basic_modal))


def test_free_pure_variables_are_closed_universally(basic_modal, identity):
    assert valid_inequality(identity, parse_inequality("box(*m) <= *m", basic_modal))
    assert not valid_inequality(identity, parse_inequality("#j <= *m", basic_modal))


def test_verdicts(basic_modal, batteries):
    result = verdicts(batteries["basic_modal"], parse_inequality("p <= p \\/ q", basic_modal))
    assert set(result.values()) == {True}


def test_unbound_variable(identity):
    with pytest.raises(UnboundVariableException):
        evaluate(identity, {}, PropVar("p"))


def test_valuation_guard(basic_modal):
    tight = Settings(_env_file=None, max_valuations=10)
    model = build_dle(basic_modal, antichain_poset(3), settings=tight)
    with pytest.raises(TooManyValuationsException):
        valid_inequality(model, parse_inequality("p /\\ q <= q", basic_modal), tight)


def test_poset_guard(basic_modal, settings):
    with pytest.raises(PosetTooLargeException):
        build_dle(basic_modal, chain_poset(settings.max_poset_size + 1), settings=settings)


def test_dump_and_load(basic_modal, batteries, settings):
    for model in batteries["basic_modal"]:
        loaded = load_model(dump_model(model), basic_modal, settings)
        assert loaded.generators == model.generators
        assert sorted(loaded.poset.edges) == sorted(model.poset.edges)


@pytest.mark.parametrize("text", [
    "model broken\ncover 0 1\n",
    "points 2\nfrobnicate\n",
    "points two\n",
    "points 2\ncover 0 1\ncover 1 0\nop dia 0 : 1\nop dia 1 : 1\nop box 0 : 1\nop box 1 : -\n",
    "points 2\ncover 0 1\nop dia 0 : 0\nop dia 1 : 1\nop box 0 : 1\nop box 1 : -\n",
    "points 2\ncover 0 1\nop dia 0 : 1\nop box 0 : 1\nop box 1 : -\n",
])
def test_load_errors(basic_modal, settings, text):
    with pytest.raises(SignatureException):
        load_model(text, basic_modal, settings)


def test_load_too_large(basic_modal, settings):
    with pytest.raises(PosetTooLargeException):
        load_model("points 9\n", basic_modal, settings)
