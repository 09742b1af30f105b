import pytest

from core.exceptions import (
    ArityMismatchException,
    DuplicateNameException,
    SignatureException,
    UnknownConnectiveException,
    ZeroArityException,
)
from services.signature import (
    Family,
    Origin,
    Polarity,
    Signature,
    expand_signature,
    parse_order_type,
    parse_signature_file,
    residual,
)

D, ONE = Polarity.NEGATIVE, Polarity.POSITIVE


def test_basic_modal_has_residuals_and_aliases(basic_modal):
    dia, box = basic_modal.lookup("dia"), basic_modal.lookup("box")
    assert dia.family is Family.F and box.family is Family.G
    pdia = basic_modal.lookup("pdia")
    assert pdia.name == "boxb1"
    assert pdia.family is Family.F and pdia.order_type == (ONE,)
    assert basic_modal.lookup("pbox") == basic_modal.lookup("dia#1")
    assert basic_modal.display_name(pdia) == "pdia"


def test_base_membership(basic_modal):
    assert basic_modal.is_base(basic_modal.lookup("dia"))
    assert basic_modal.is_base(basic_modal.lookup("->"))
    assert not basic_modal.is_base(basic_modal.lookup("pdia"))


def test_tense_declares_adjoints_as_base(tense):
    assert tense.is_base(tense.lookup("pdia"))
    assert tense.lookup("pdia").origin is Origin.BASE


@pytest.mark.parametrize("name, coordinate, family, order_type", [
    ("fus", 1, Family.G, (ONE, D)),
    ("fus", 2, Family.G, (D, ONE)),
    ("over", 1, Family.F, (ONE, ONE)),
    ("over", 2, Family.G, (ONE, D)),
    ("under", 1, Family.G, (D, ONE)),
    ("under", 2, Family.F, (ONE, ONE)),
])
def test_residual_family_and_order_type(lambek, name, coordinate, family, order_type):
    r = residual(lambek.lookup(name), coordinate)
    assert r.family is family
    assert r.order_type == order_type
    assert r.parent == name and r.coordinate == coordinate
    assert lambek.has(r.name)


def test_residual_of_residual_is_parent(basic_modal):
    dia = basic_modal.lookup("dia")
    assert basic_modal.residual_of(basic_modal.residual_of(dia, 1), 1) == dia


def test_constants_have_no_residuals(lambek):
    with pytest.raises(ZeroArityException):
        residual(lambek.lookup("e"), 1)


def test_lattice_residuals_always_present():
    sig = parse_signature_file("")
    imp = sig.lookup("->")
    assert imp.family is Family.G and imp.order_type == (D, ONE)
    assert Signature.lattice_residual("-<").order_type == (ONE, D)
    with pytest.raises(UnknownConnectiveException):
        Signature.lattice_residual("=>")


def test_comments_and_blank_lines():
    sig = parse_signature_file("# header\n\nf dia 1 (1)   # diamond\ng box 1 (1)\n")
    assert [c.name for c in sig.base] == ["dia", "box"]
    assert sig.expanded


def test_expand_is_idempotent(basic_modal):
    assert expand_signature(basic_modal) is basic_modal


@pytest.mark.parametrize("text, error", [
    ("f dia 1 (1)\nf dia 1 (1)", DuplicateNameException),
    ("f dia 2 (1)", ArityMismatchException),
    ("f k 1 (1)", SignatureException),
    ("h dia 1 (1)", SignatureException),
    ("f dia one (1)", SignatureException),
    ("f dia 1 1", SignatureException),
    ("f dia 1 (x)", SignatureException),
    ("f dia 1 (1)\nalias dia = dia#1", DuplicateNameException),
    ("f dia 1 (1)\nalias = dia#1", SignatureException),
    ("f -> 2 (1,1)", DuplicateNameException),
])
def test_malformed_signatures(text, error):
    with pytest.raises(error):
        parse_signature_file(text)


def test_unknown_connective(basic_modal):
    with pytest.raises(UnknownConnectiveException):
        basic_modal.lookup("nabla")


def test_alias_target_must_be_declared():
    with pytest.raises(UnknownConnectiveException) as exc:
        parse_signature_file("f dia 1 (1)\nalias foo = nosuch\n")
    assert exc.value.name == "nosuch"
    assert parse_signature_file("f dia 1 (1)\nalias pbox = dia#1\n").lookup("pbox").name == "dia#1"


def test_parse_order_type():
    assert parse_order_type("(1, d)") == (ONE, D)
    assert parse_order_type("()") == ()
