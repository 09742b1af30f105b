"""DLE similarity types, residual closure and the signature file format.

A signature file is line oriented::

    f dia 1 (1)          # f-connective, arity 1, order type (1)
    g over 2 (1,d)       # d stands for the antitone coordinate
    alias pdia = boxb1   # optional identification

The lattice core (meet, join, top, bottom) and the lattice residuals
``->`` (G, (d,1)), ``<-`` (G, (1,d)), ``>-`` (F, (d,1)) and ``-<`` (F, (1,d))
are always present.
"""
import logging
from enum import Enum
from pathlib import Path
from typing import Final, Iterable

from pydantic import BaseModel, ConfigDict, model_validator

from core.exceptions import (
    ArityMismatchException,
    DuplicateNameException,
    SignatureException,
    UnknownConnectiveException,
    ZeroArityException,
)

LOGGER: Final = logging.getLogger(__name__)

RESERVED: Final = frozenset({"k", "l", "top", "bot", "A", "E", "nom", "conom"})


class Polarity(str, Enum):
    POSITIVE = "1"
    NEGATIVE = "d"

    @property
    def dual(self) -> "Polarity":
        return Polarity.NEGATIVE if self is Polarity.POSITIVE else Polarity.POSITIVE

    def __str__(self) -> str:
        return self.value


class Family(str, Enum):
    F = "f"
    G = "g"

    @property
    def dual(self) -> "Family":
        return Family.G if self is Family.F else Family.F


class Origin(str, Enum):
    BASE = "base"
    RESIDUAL = "residual"
    LATTICE = "lattice"


OrderType = tuple[Polarity, ...]


def dual_order_type(order_type: OrderType) -> OrderType:
    return tuple(e.dual for e in order_type)


def parse_order_type(text: str) -> OrderType:
    body = text.strip()
    if not (body.startswith("(") and body.endswith(")")):
        raise SignatureException(f"Order type must be parenthesised: {text!r}")
    items = [x.strip() for x in body[1:-1].split(",") if x.strip()]
    try:
        return tuple(Polarity(x) for x in items)
    except ValueError:
        raise SignatureException(f"Order type entries must be 1 or d: {text!r}")


class Connective(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    family: Family
    arity: int
    order_type: OrderType
    origin: Origin = Origin.BASE
    parent: str | None = None
    coordinate: int | None = None

    @model_validator(mode="after")
    def _check_arity(self) -> "Connective":
        if self.arity < 0 or self.arity != len(self.order_type):
            raise ArityMismatchException(self.name, self.arity, len(self.order_type))
        return self

    @property
    def is_f(self) -> bool:
        return self.family is Family.F

    @property
    def is_g(self) -> bool:
        return self.family is Family.G

    @property
    def dual_order_type(self) -> OrderType:
        return dual_order_type(self.order_type)

    def polarity(self, i: int) -> Polarity:
        """Order type entry of coordinate ``i`` (0-based)."""
        return self.order_type[i]

    def __str__(self) -> str:
        return self.name


def residual(c: Connective, i: int) -> Connective:
    """The residual of ``c`` in coordinate ``i`` (1-based).

    f in F, eps(i)=1: result in G, coordinate i stays 1, the others flip.
    f in F, eps(i)=d: result in F, the order type is unchanged.
    Dually for g in G.
    """
    if c.arity == 0:
        raise ZeroArityException(c.name)
    if not 1 <= i <= c.arity:
        raise SignatureException(f"Coordinate {i} out of range for '{c.name}'")
    k = i - 1
    if c.order_type[k] is Polarity.POSITIVE:
        family = c.family.dual
        order_type = tuple(e if j == k else e.dual for j, e in enumerate(c.order_type))
    else:
        family = c.family
        order_type = c.order_type
    mark = "#" if c.is_f else "b"
    return Connective(
        name=f"{c.name}{mark}{i}",
        family=family,
        arity=c.arity,
        order_type=order_type,
        origin=Origin.RESIDUAL,
        parent=c.name,
        coordinate=i,
    )


IMP: Final = Connective(name="->", family=Family.G, arity=2,
                        order_type=(Polarity.NEGATIVE, Polarity.POSITIVE), origin=Origin.LATTICE)
REV_IMP: Final = Connective(name="<-", family=Family.G, arity=2,
                            order_type=(Polarity.POSITIVE, Polarity.NEGATIVE), origin=Origin.LATTICE)
LEFT_SUB: Final = Connective(name=">-", family=Family.F, arity=2,
                             order_type=(Polarity.NEGATIVE, Polarity.POSITIVE), origin=Origin.LATTICE)
RIGHT_SUB: Final = Connective(name="-<", family=Family.F, arity=2,
                              order_type=(Polarity.POSITIVE, Polarity.NEGATIVE), origin=Origin.LATTICE)
LATTICE_RESIDUALS: Final = (IMP, REV_IMP, LEFT_SUB, RIGHT_SUB)


class Signature(BaseModel):
    model_config = ConfigDict(frozen=True)

    base: tuple[Connective, ...] = ()
    residuals: tuple[Connective, ...] = ()
    aliases: tuple[tuple[str, str], ...] = ()
    expanded: bool = False

    def _table(self) -> dict[str, Connective]:
        table = {c.name: c for c in (*self.base, *self.residuals, *LATTICE_RESIDUALS)}
        for alias, target in self.aliases:
            if target in table:
                table.setdefault(alias, table[target])
        return table

    @property
    def connectives(self) -> tuple[Connective, ...]:
        return (*self.base, *self.residuals, *LATTICE_RESIDUALS)

    @property
    def base_names(self) -> frozenset[str]:
        return frozenset(c.name for c in self.base) | frozenset(c.name for c in LATTICE_RESIDUALS)

    def is_base(self, c: Connective) -> bool:
        return c.origin is not Origin.RESIDUAL and c.name in self.base_names

    def lookup(self, name: str) -> Connective:
        try:
            return self._table()[name]
        except KeyError:
            raise UnknownConnectiveException(name)

    def has(self, name: str) -> bool:
        return name in self._table()

    def residual_of(self, c: Connective, i: int) -> Connective:
        """Residual of ``c`` in coordinate ``i``, resolved inside this signature.

        Residuating a residual in its own coordinate gives back the parent.
        """
        if c.origin is Origin.RESIDUAL and c.coordinate == i and c.parent and self.has(c.parent):
            return self.lookup(c.parent)
        r = residual(c, i)
        if self.has(r.name):
            return self.lookup(r.name)
        return r

    @staticmethod
    def lattice_residual(kind: str) -> Connective:
        for c in LATTICE_RESIDUALS:
            if c.name == kind:
                return c
        raise UnknownConnectiveException(kind)

    def display_name(self, c: Connective) -> str:
        """Preferred alias of a connective, if one is declared."""
        for alias, target in self.aliases:
            if target == c.name:
                return alias
        return c.name


def validate_signature(raw: Iterable[tuple[str, str, int, OrderType]],
                       aliases: Iterable[tuple[str, str]] = ()) -> Signature:
    """Build a Signature from (family, name, arity, order type) declarations."""
    seen: set[str] = set()
    base: list[Connective] = []
    for family, name, arity, order_type in raw:
        if name in seen or name in {c.name for c in LATTICE_RESIDUALS}:
            raise DuplicateNameException(name)
        if name in RESERVED:
            raise SignatureException(f"'{name}' is a reserved name")
        try:
            fam = Family(family)
        except ValueError:
            raise SignatureException(f"Unknown family '{family}' for '{name}'")
        base.append(Connective(name=name, family=fam, arity=arity, order_type=tuple(order_type)))
        seen.add(name)
    alias_pairs = tuple(aliases)
    targets = seen | {c.name for c in LATTICE_RESIDUALS}
    targets |= {residual(c, i).name for c in base for i in range(1, c.arity + 1)}
    for alias, target in alias_pairs:
        if alias in seen or alias in RESERVED:
            raise DuplicateNameException(alias)
        if target not in targets:
            raise UnknownConnectiveException(target)
        seen.add(alias)
        targets.add(alias)
    LOGGER.debug("Validated signature with %d base connectives", len(base))
    return Signature(base=tuple(base), aliases=alias_pairs)


def expand_signature(s: Signature) -> Signature:
    """Add every first-level residual of every base connective."""
    if s.expanded:
        return s
    names = {c.name for c in s.base}
    residuals = []
    for c in s.base:
        for i in range(1, c.arity + 1):
            r = residual(c, i)
            if r.name in names:
                raise DuplicateNameException(r.name)
            residuals.append(r)
            names.add(r.name)
    return Signature(base=s.base, residuals=tuple(residuals), aliases=s.aliases, expanded=True)


def parse_signature_file(text: str) -> Signature:
    raw: list[tuple[str, str, int, OrderType]] = []
    aliases: list[tuple[str, str]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = _strip_comment(line)
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if head == "alias":
            alias, eq, target = rest.partition("=")
            if not eq or not alias.strip() or not target.strip():
                raise SignatureException(f"line {lineno}: expected 'alias <name> = <name>'")
            aliases.append((alias.strip(), target.strip()))
            continue
        if head not in ("f", "g"):
            raise SignatureException(f"line {lineno}: unknown declaration '{head}'")
        parts = rest.split(None, 2)
        if len(parts) != 3:
            raise SignatureException(f"line {lineno}: expected '{head} <name> <arity> (<order type>)'")
        name, arity, order_type = parts
        try:
            n = int(arity)
        except ValueError:
            raise SignatureException(f"line {lineno}: arity must be an integer")
        raw.append((head, name, n, parse_order_type(order_type)))
    return expand_signature(validate_signature(raw, aliases))


def _strip_comment(line: str) -> str:
    # comments start at a "#" preceded by whitespace; dia#1 is a name
    stripped = line.strip()
    if stripped.startswith("#"):
        return ""
    idx = line.find(" #")
    return (line[:idx] if idx >= 0 else line).strip()


def load_signature(path: str | Path) -> Signature:
    p = Path(path)
    LOGGER.info("Loading signature %s", p)
    return parse_signature_file(p.read_text(encoding="utf-8"))
