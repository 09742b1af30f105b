"""Terms, inequalities and meta-formulas: AST, parser, printer and utilities.

Concrete syntax
---------------

Terms::

    p  q_1  h'            proposition variables
    #j                    nominal
    *m                    conominal
    top  bot              lattice constants
    a /\\ b   a \\/ b       meet, join (right nested)
    a -> b  a <- b        lattice residuals in G
    a >- b  a -< b        lattice residuals in F
    dia(a)  over(a, b)    named connectives (commas optional), e for constants
    k(t)  l(t)            kappa and lambda

Meta-formulas::

    s <= t    s !<= t
    ~~ phi    phi && psi    phi || psi    phi ==> psi
    A j:nom. phi          E m:conom. phi
    A[i:nom, n:conom |> f t]. phi     restricted quantifier over f with restrictor t
    [ phi ]               grouping
"""
import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Final, Iterable, Iterator, Mapping, Union, final

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from core.exceptions import (
    ArityException,
    NotFlippableException,
    ParseException,
    SortException,
)
from .signature import (
    IMP,
    LEFT_SUB,
    REV_IMP,
    RIGHT_SUB,
    Connective,
    Polarity,
    Signature,
    expand_signature,
)

LOGGER: Final = logging.getLogger(__name__)


class Sign(str, Enum):
    PLUS = "+"
    MINUS = "-"

    @property
    def flip(self) -> "Sign":
        return Sign.MINUS if self is Sign.PLUS else Sign.PLUS

    def through(self, polarity: Polarity) -> "Sign":
        return self if polarity is Polarity.POSITIVE else self.flip


class Sort(str, Enum):
    NOM = "nom"
    CONOM = "conom"

    @property
    def dual(self) -> "Sort":
        return Sort.CONOM if self is Sort.NOM else Sort.NOM


# -- terms -------------------------------------------------------------------

@final
@dataclass(frozen=True)
class PropVar:
    name: str


@final
@dataclass(frozen=True)
class Nominal:
    name: str


@final
@dataclass(frozen=True)
class Conominal:
    name: str


@final
@dataclass(frozen=True)
class Top:
    pass


@final
@dataclass(frozen=True)
class Bot:
    pass


@final
@dataclass(frozen=True)
class Meet:
    left: "Term"
    right: "Term"


@final
@dataclass(frozen=True)
class Join:
    left: "Term"
    right: "Term"


@final
@dataclass(frozen=True)
class App:
    op: Connective
    args: tuple["Term", ...] = ()


@final
@dataclass(frozen=True)
class Kappa:
    arg: "Term"


@final
@dataclass(frozen=True)
class Lambda:
    arg: "Term"


Term = Union[PropVar, Nominal, Conominal, Top, Bot, Meet, Join, App, Kappa, Lambda]
Var = Union[PropVar, Nominal, Conominal]
PureVar = Union[Nominal, Conominal]

TOP: Final = Top()
BOT: Final = Bot()


@final
@dataclass(frozen=True)
class Inequality:
    lhs: Term
    rhs: Term


# -- meta-formulas -------------------------------------------------------------

@final
@dataclass(frozen=True)
class Binder:
    name: str
    sort: Sort

    @property
    def var(self) -> PureVar:
        return Nominal(self.name) if self.sort is Sort.NOM else Conominal(self.name)


@final
@dataclass(frozen=True)
class NegIneq:
    lhs: Term
    rhs: Term

    @property
    def positive(self) -> Inequality:
        return Inequality(self.lhs, self.rhs)


@final
@dataclass(frozen=True)
class MAnd:
    items: tuple["MetaFormula", ...]


@final
@dataclass(frozen=True)
class MOr:
    items: tuple["MetaFormula", ...]


@final
@dataclass(frozen=True)
class MNot:
    body: "MetaFormula"


@final
@dataclass(frozen=True)
class MImp:
    antecedent: "MetaFormula"
    consequent: "MetaFormula"


@final
@dataclass(frozen=True)
class Forall:
    binder: Binder
    body: "MetaFormula"


@final
@dataclass(frozen=True)
class Exists:
    binder: Binder
    body: "MetaFormula"


@final
@dataclass(frozen=True)
class RestrictedForall:
    binders: tuple[Binder, ...]
    op: Connective
    restrictor: Term
    body: "MetaFormula"


@final
@dataclass(frozen=True)
class RestrictedExists:
    binders: tuple[Binder, ...]
    op: Connective
    restrictor: Term
    body: "MetaFormula"


MetaFormula = Union[Inequality, NegIneq, MAnd, MOr, MNot, MImp, Forall, Exists, RestrictedForall, RestrictedExists]
Quantifier = Union[Forall, Exists, RestrictedForall, RestrictedExists]
Ast = Union[Term, MetaFormula]


def meta_and(items: Iterable[MetaFormula]) -> MetaFormula:
    flat: list[MetaFormula] = []
    for item in items:
        flat.extend(item.items if isinstance(item, MAnd) else (item,))
    return flat[0] if len(flat) == 1 else MAnd(tuple(flat))


def meta_or(items: Iterable[MetaFormula]) -> MetaFormula:
    flat: list[MetaFormula] = []
    for item in items:
        flat.extend(item.items if isinstance(item, MOr) else (item,))
    return flat[0] if len(flat) == 1 else MOr(tuple(flat))


def forall_all(binders: Iterable[Binder], body: MetaFormula) -> MetaFormula:
    for b in reversed(list(binders)):
        body = Forall(b, body)
    return body


def meet_all(terms: Iterable[Term]) -> Term:
    """Right nested meet; the empty meet is top."""
    items = list(terms)
    if not items:
        return TOP
    acc = items[-1]
    for t in reversed(items[:-1]):
        acc = Meet(t, acc)
    return acc


def join_all(terms: Iterable[Term]) -> Term:
    """Right nested join; the empty join is bottom."""
    items = list(terms)
    if not items:
        return BOT
    acc = items[-1]
    for t in reversed(items[:-1]):
        acc = Join(t, acc)
    return acc


# -- sorts and structure ---------------------------------------------------------

def sort_of(t: Term) -> Sort | None:
    """Nominal and lambda terms are nominal-sorted, conominal and kappa terms conominal-sorted."""
    match t:
        case Nominal() | Lambda():
            return Sort.NOM
        case Conominal() | Kappa():
            return Sort.CONOM
    return None


def restricted_sorts(op: Connective) -> tuple[Sort, ...]:
    """Sorts of the variables bound by a restricted quantifier over ``op``."""
    if op.is_f:
        return tuple(Sort.NOM if e is Polarity.POSITIVE else Sort.CONOM for e in op.order_type)
    return tuple(Sort.CONOM if e is Polarity.POSITIVE else Sort.NOM for e in op.order_type)


def children(t: Term) -> tuple[Term, ...]:
    match t:
        case Meet(l, r) | Join(l, r):
            return (l, r)
        case App(_, args):
            return args
        case Kappa(a) | Lambda(a):
            return (a,)
    return ()


def rebuild(t: Term, kids: tuple[Term, ...]) -> Term:
    match t:
        case Meet():
            return Meet(kids[0], kids[1])
        case Join():
            return Join(kids[0], kids[1])
        case App(op, _):
            return App(op, tuple(kids))
        case Kappa():
            return Kappa(kids[0])
        case Lambda():
            return Lambda(kids[0])
    return t


Path = tuple[int, ...]


def subterm(t: Term, path: Path) -> Term:
    for i in path:
        t = children(t)[i]
    return t


def replace_at(t: Term, path: Path, new: Term) -> Term:
    if not path:
        return new
    kids = list(children(t))
    kids[path[0]] = replace_at(kids[path[0]], path[1:], new)
    return rebuild(t, tuple(kids))


def positions(t: Term, path: Path = ()) -> Iterator[tuple[Path, Term]]:
    """Pre-order, left to right."""
    yield path, t
    for i, c in enumerate(children(t)):
        yield from positions(c, path + (i,))


def child_sign(sign: Sign, t: Term, i: int) -> Sign:
    if isinstance(t, App):
        return sign.through(t.op.order_type[i])
    return sign


def signed_positions(t: Term, sign: Sign, path: Path = ()) -> Iterator[tuple[Path, Term, Sign]]:
    yield path, t, sign
    for i, c in enumerate(children(t)):
        yield from signed_positions(c, child_sign(sign, t, i), path + (i,))


def sign_at(t: Term, sign: Sign, path: Path) -> Sign:
    for i in path:
        sign = child_sign(sign, t, i)
        t = children(t)[i]
    return sign


def prop_vars(t: Term | Inequality) -> list[str]:
    """Proposition variable names in order of first occurrence."""
    terms = (t.lhs, t.rhs) if isinstance(t, Inequality) else (t,)
    seen: dict[str, None] = {}
    for term in terms:
        for _, s in positions(term):
            if isinstance(s, PropVar):
                seen.setdefault(s.name)
    return list(seen)


def pure_vars(t: Term) -> list[PureVar]:
    seen: dict[PureVar, None] = {}
    for _, s in positions(t):
        if isinstance(s, (Nominal, Conominal)):
            seen.setdefault(s)
    return list(seen)


def occurs(var: Var, t: Term) -> bool:
    return any(s == var for _, s in positions(t))


def occurrences(var: Var, t: Term) -> list[Path]:
    return [path for path, s in positions(t) if s == var]


def count_occurrences(var: Var, t: Term) -> int:
    return len(occurrences(var, t))


def is_pure(t: Term | Inequality) -> bool:
    if isinstance(t, Inequality):
        return is_pure(t.lhs) and is_pure(t.rhs)
    return not any(isinstance(s, PropVar) for _, s in positions(t))


def connectives_of(t: Term) -> list[Connective]:
    return [s.op for _, s in positions(t) if isinstance(s, App)]


def polarity_of_occurrences(root_sign: Sign, t: Term, var: str | Var) -> list[Sign]:
    """One sign per occurrence of ``var``, left to right."""
    target = PropVar(var) if isinstance(var, str) else var
    return [s for _, node, s in signed_positions(t, root_sign) if node == target]


# -- kappa / lambda ------------------------------------------------------------------

def simplify_kl(t: Term) -> Term:
    """Cancel kappa(lambda(x)) and lambda(kappa(x))."""
    kids = tuple(simplify_kl(c) for c in children(t))
    t = rebuild(t, kids) if kids else t
    match t:
        case Kappa(Lambda(x)) | Lambda(Kappa(x)):
            return x
    return t


def rho(t: Term) -> Term:
    """The kappa/lambda flip of a pure variable term: nominal-sorted terms go through kappa."""
    s = sort_of(t)
    if s is Sort.NOM:
        return simplify_kl(Kappa(t))
    if s is Sort.CONOM:
        return simplify_kl(Lambda(t))
    raise SortException(f"{render(t)} is neither nominal- nor conominal-sorted")


def flip(neg: NegIneq) -> Inequality:
    """j !<= a  iff  a <= k(j);   a !<= m  iff  l(m) <= a."""
    if sort_of(neg.lhs) is Sort.NOM:
        return Inequality(neg.rhs, simplify_kl(Kappa(neg.lhs)))
    if sort_of(neg.rhs) is Sort.CONOM:
        return Inequality(simplify_kl(Lambda(neg.rhs)), neg.lhs)
    raise NotFlippableException(render(neg))


def unflip(ineq: Inequality) -> NegIneq:
    """Inverse of :func:`flip`."""
    if isinstance(ineq.rhs, Kappa):
        return NegIneq(ineq.rhs.arg, ineq.lhs)
    if isinstance(ineq.lhs, Lambda):
        return NegIneq(ineq.rhs, ineq.lhs.arg)
    if sort_of(ineq.rhs) is Sort.CONOM:
        return NegIneq(simplify_kl(Lambda(ineq.rhs)), ineq.lhs)
    if sort_of(ineq.lhs) is Sort.NOM:
        return NegIneq(ineq.rhs, simplify_kl(Kappa(ineq.lhs)))
    raise NotFlippableException(render(ineq))


# -- substitution -------------------------------------------------------------------------

def _check_binding(var: Var, value: Term) -> None:
    target = sort_of(value)
    if isinstance(var, Nominal) and target is Sort.CONOM:
        raise SortException(f"cannot bind nominal #{var.name} to conominal-sorted {render(value)}")
    if isinstance(var, Conominal) and target is Sort.NOM:
        raise SortException(f"cannot bind conominal *{var.name} to nominal-sorted {render(value)}")


def _subst(t: Term, bindings: Mapping[Var, Term]) -> Term:
    if isinstance(t, (PropVar, Nominal, Conominal)):
        return bindings.get(t, t)
    kids = children(t)
    if not kids:
        return t
    return rebuild(t, tuple(_subst(c, bindings) for c in kids))


def substitute(t: Term, bindings: Mapping[Var, Term]) -> Term:
    """Simultaneous substitution; kappa/lambda pairs created by it are cancelled."""
    for var, value in bindings.items():
        _check_binding(var, value)
    return simplify_kl(_subst(t, bindings))


def substitute_ineq(ineq: Inequality, bindings: Mapping[Var, Term]) -> Inequality:
    return Inequality(substitute(ineq.lhs, bindings), substitute(ineq.rhs, bindings))


def free_pure_vars(mf: MetaFormula) -> set[PureVar]:
    match mf:
        case Inequality(l, r) | NegIneq(l, r):
            return set(pure_vars(l)) | set(pure_vars(r))
        case MAnd(items) | MOr(items):
            return set().union(*(free_pure_vars(x) for x in items)) if items else set()
        case MNot(b):
            return free_pure_vars(b)
        case MImp(a, c):
            return free_pure_vars(a) | free_pure_vars(c)
        case Forall(b, body) | Exists(b, body):
            return free_pure_vars(body) - {b.var}
        case RestrictedForall(bs, _, r, body) | RestrictedExists(bs, _, r, body):
            return set(pure_vars(r)) | (free_pure_vars(body) - {b.var for b in bs})
    raise TypeError(mf)


def bound_names(mf: MetaFormula) -> set[str]:
    match mf:
        case MAnd(items) | MOr(items):
            return set().union(*(bound_names(x) for x in items)) if items else set()
        case MNot(b):
            return bound_names(b)
        case MImp(a, c):
            return bound_names(a) | bound_names(c)
        case Forall(b, body) | Exists(b, body):
            return {b.name} | bound_names(body)
        case RestrictedForall(bs, _, _, body) | RestrictedExists(bs, _, _, body):
            return {b.name for b in bs} | bound_names(body)
    return set()


def all_names(mf: MetaFormula | Term) -> set[str]:
    if not isinstance(mf, (Inequality, NegIneq, MAnd, MOr, MNot, MImp, Forall, Exists,
                           RestrictedForall, RestrictedExists)):
        return {s.name for _, s in positions(mf) if isinstance(s, (PropVar, Nominal, Conominal))}
    return {v.name for v in free_pure_vars(mf)} | bound_names(mf) | _meta_prop_names(mf)


def _meta_prop_names(mf: MetaFormula) -> set[str]:
    out: set[str] = set()
    for t in meta_terms(mf):
        out |= {s.name for _, s in positions(t) if isinstance(s, PropVar)}
    return out


def meta_terms(mf: MetaFormula) -> Iterator[Term]:
    match mf:
        case Inequality(l, r) | NegIneq(l, r):
            yield l
            yield r
        case MAnd(items) | MOr(items):
            for x in items:
                yield from meta_terms(x)
        case MNot(b) | Forall(_, b) | Exists(_, b):
            yield from meta_terms(b)
        case MImp(a, c):
            yield from meta_terms(a)
            yield from meta_terms(c)
        case RestrictedForall(_, _, r, body) | RestrictedExists(_, _, r, body):
            yield r
            yield from meta_terms(body)


def map_inequalities(mf: MetaFormula, fn: Callable[[Term], Term]) -> MetaFormula:
    """Apply ``fn`` to every term of every (negated) inequality and restrictor."""
    match mf:
        case Inequality(l, r):
            return Inequality(fn(l), fn(r))
        case NegIneq(l, r):
            return NegIneq(fn(l), fn(r))
        case MAnd(items):
            return MAnd(tuple(map_inequalities(x, fn) for x in items))
        case MOr(items):
            return MOr(tuple(map_inequalities(x, fn) for x in items))
        case MNot(b):
            return MNot(map_inequalities(b, fn))
        case MImp(a, c):
            return MImp(map_inequalities(a, fn), map_inequalities(c, fn))
        case Forall(b, body):
            return Forall(b, map_inequalities(body, fn))
        case Exists(b, body):
            return Exists(b, map_inequalities(body, fn))
        case RestrictedForall(bs, op, r, body):
            return RestrictedForall(bs, op, fn(r), map_inequalities(body, fn))
        case RestrictedExists(bs, op, r, body):
            return RestrictedExists(bs, op, fn(r), map_inequalities(body, fn))
    raise TypeError(mf)


def substitute_meta(mf: MetaFormula, bindings: Mapping[Var, Term]) -> MetaFormula:
    """Capture-free simultaneous substitution; bound names are freshened when needed."""
    for var, value in bindings.items():
        _check_binding(var, value)
    return _subst_meta(mf, dict(bindings))


def _rebind(binders: tuple[Binder, ...], body: MetaFormula, bindings: dict[Var, Term],
            avoid: set[str]) -> tuple[tuple[Binder, ...], MetaFormula, dict[Var, Term]]:
    inner = {k: v for k, v in bindings.items() if k not in {b.var for b in binders}}
    captured = set()
    for value in inner.values():
        captured |= {v.name for v in pure_vars(value)}
    fresh = FreshNames(avoid | captured | all_names(body) | {n.name for n in inner})
    new_binders = []
    renames: dict[Var, Term] = {}
    for b in binders:
        if b.name in captured:
            nb = Binder(fresh.name(b.name), b.sort)
            renames[b.var] = nb.var
            new_binders.append(nb)
        else:
            new_binders.append(b)
    if renames:
        body = _subst_meta(body, renames)
    return tuple(new_binders), body, inner


def _subst_meta(mf: MetaFormula, bindings: dict[Var, Term]) -> MetaFormula:
    if not bindings:
        return mf
    match mf:
        case Inequality(l, r):
            return Inequality(simplify_kl(_subst(l, bindings)), simplify_kl(_subst(r, bindings)))
        case NegIneq(l, r):
            return NegIneq(simplify_kl(_subst(l, bindings)), simplify_kl(_subst(r, bindings)))
        case MAnd(items):
            return MAnd(tuple(_subst_meta(x, bindings) for x in items))
        case MOr(items):
            return MOr(tuple(_subst_meta(x, bindings) for x in items))
        case MNot(b):
            return MNot(_subst_meta(b, bindings))
        case MImp(a, c):
            return MImp(_subst_meta(a, bindings), _subst_meta(c, bindings))
        case Forall(b, body) | Exists(b, body):
            (nb,), nbody, inner = _rebind((b,), body, bindings, set())
            return type(mf)(nb, _subst_meta(nbody, inner))
        case RestrictedForall(bs, op, r, body) | RestrictedExists(bs, op, r, body):
            nr = simplify_kl(_subst(r, bindings))
            nbs, nbody, inner = _rebind(bs, body, bindings, set())
            return type(mf)(nbs, op, nr, _subst_meta(nbody, inner))
    raise TypeError(mf)


class FreshNames:
    """Per-run supply of fresh pure-variable names."""

    def __init__(self, taken: Iterable[str] = ()):
        self.taken: set[str] = set(taken)
        self.counters: dict[str, int] = {}

    def reserve(self, names: Iterable[str]) -> None:
        self.taken.update(names)

    def name(self, prefix: str) -> str:
        base = prefix.rstrip("0123456789'") or prefix
        n = self.counters.get(base, 0)
        while True:
            n += 1
            candidate = f"{base}{n}"
            if candidate not in self.taken:
                self.counters[base] = n
                self.taken.add(candidate)
                return candidate

    def nominal(self, prefix: str = "i") -> Nominal:
        return Nominal(self.name(prefix))

    def conominal(self, prefix: str = "n") -> Conominal:
        return Conominal(self.name(prefix))

    def of_sort(self, sort: Sort, prefix: str | None = None) -> PureVar:
        if sort is Sort.NOM:
            return self.nominal(prefix or "i")
        return self.conominal(prefix or "n")

    def prop(self, prefix: str = "q") -> PropVar:
        return PropVar(self.name(prefix))


# -- restricted quantifiers ----------------------------------------------------------------

def restricting_inequality(binders: tuple[Binder, ...], op: Connective, restrictor: Term) -> Inequality:
    application = App(op, tuple(b.var for b in binders))
    if op.is_f:
        return Inequality(restrictor, application)
    return Inequality(application, restrictor)


def expand_restricted(mf: MetaFormula) -> MetaFormula:
    """Rewrite every restricted quantifier into plain quantifiers and a restricting inequality."""
    match mf:
        case Inequality() | NegIneq():
            return mf
        case MAnd(items):
            return MAnd(tuple(expand_restricted(x) for x in items))
        case MOr(items):
            return MOr(tuple(expand_restricted(x) for x in items))
        case MNot(b):
            return MNot(expand_restricted(b))
        case MImp(a, c):
            return MImp(expand_restricted(a), expand_restricted(c))
        case Forall(b, body):
            return Forall(b, expand_restricted(body))
        case Exists(b, body):
            return Exists(b, expand_restricted(body))
        case RestrictedForall(bs, op, r, body):
            inner: MetaFormula = MImp(restricting_inequality(bs, op, r), expand_restricted(body))
            return forall_all(bs, inner)
        case RestrictedExists(bs, op, r, body):
            inner = meta_and([restricting_inequality(bs, op, r), expand_restricted(body)])
            for b in reversed(bs):
                inner = Exists(b, inner)
            return inner
    raise TypeError(mf)


def _restricting_match(ineq: MetaFormula, binders: list[Binder]) -> tuple[int, Connective, Term] | None:
    """If ``ineq`` restricts a suffix of ``binders``, return (suffix start, op, restrictor)."""
    if not isinstance(ineq, Inequality):
        return None
    for app, restrictor, family_f in ((ineq.rhs, ineq.lhs, True), (ineq.lhs, ineq.rhs, False)):
        if not isinstance(app, App) or app.op.is_f != family_f or app.op.arity == 0:
            continue
        n = app.op.arity
        if n > len(binders):
            continue
        suffix = binders[len(binders) - n:]
        if tuple(b.var for b in suffix) != app.args:
            continue
        if tuple(b.sort for b in suffix) != restricted_sorts(app.op):
            continue
        if any(occurs(b.var, restrictor) for b in suffix):
            continue
        return len(binders) - n, app.op, restrictor
    return None


def contract_restricted(mf: MetaFormula) -> MetaFormula:
    """Greedy inverse of :func:`expand_restricted`."""
    match mf:
        case Inequality() | NegIneq():
            return mf
        case MAnd(items):
            return MAnd(tuple(contract_restricted(x) for x in items))
        case MOr(items):
            return MOr(tuple(contract_restricted(x) for x in items))
        case MNot(b):
            return MNot(contract_restricted(b))
        case MImp(a, c):
            return MImp(contract_restricted(a), contract_restricted(c))
        case RestrictedForall(bs, op, r, body):
            return RestrictedForall(bs, op, r, contract_restricted(body))
        case RestrictedExists(bs, op, r, body):
            return RestrictedExists(bs, op, r, contract_restricted(body))
        case Forall() | Exists():
            kind = type(mf)
            binders: list[Binder] = []
            body: MetaFormula = mf
            while isinstance(body, kind):
                binders.append(body.binder)
                body = body.body
            if kind is Forall and isinstance(body, MImp):
                hit = _restricting_match(body.antecedent, binders)
                if hit is not None:
                    start, op, r = hit
                    inner = RestrictedForall(tuple(binders[start:]), op, r, contract_restricted(body.consequent))
                    return _wrap_plain(kind, binders[:start], inner)
            if kind is Exists and isinstance(body, MAnd) and body.items:
                hit = _restricting_match(body.items[0], binders)
                if hit is not None:
                    start, op, r = hit
                    rest = meta_and(body.items[1:]) if len(body.items) > 1 else None
                    if rest is not None:
                        inner = RestrictedExists(tuple(binders[start:]), op, r, contract_restricted(rest))
                        return _wrap_plain(kind, binders[:start], inner)
            return _wrap_plain(kind, binders, contract_restricted(body))
    raise TypeError(mf)


def _wrap_plain(kind: type, binders: list[Binder], body: MetaFormula) -> MetaFormula:
    for b in reversed(binders):
        body = kind(b, body)
    return body


# -- printing ------------------------------------------------------------------------------

_INFIX: Final = {"->", "<-", ">-", "-<"}


def _is_infix(t: Term) -> bool:
    return isinstance(t, (Meet, Join)) or (isinstance(t, App) and t.op.name in _INFIX)


def _wrap(t: Term) -> str:
    s = render_term(t)
    return f"({s})" if _is_infix(t) else s


def render_term(t: Term) -> str:
    match t:
        case PropVar(name):
            return name
        case Nominal(name):
            return f"#{name}"
        case Conominal(name):
            return f"*{name}"
        case Top():
            return "top"
        case Bot():
            return "bot"
        case Meet(l, r):
            return f"{_wrap(l)} /\\ {_wrap(r)}"
        case Join(l, r):
            return f"{_wrap(l)} \\/ {_wrap(r)}"
        case App(op, args) if op.name in _INFIX:
            return f"{_wrap(args[0])} {op.name} {_wrap(args[1])}"
        case App(op, ()):
            return op.name
        case App(op, args):
            return f"{op.name}({', '.join(render_term(a) for a in args)})"
        case Kappa(a):
            return f"k({render_term(a)})"
        case Lambda(a):
            return f"l({render_term(a)})"
    raise TypeError(t)


def _binders(bs: Iterable[Binder]) -> str:
    return ", ".join(f"{b.name}:{b.sort.value}" for b in bs)


def _meta_wrap(mf: MetaFormula, loose: tuple[type, ...]) -> str:
    s = render_meta(mf)
    return f"[{s}]" if isinstance(mf, loose) else s


_QUANTS: Final = (Forall, Exists, RestrictedForall, RestrictedExists)


def render_meta(mf: MetaFormula) -> str:
    match mf:
        case Inequality(l, r):
            return f"{render_term(l)} <= {render_term(r)}"
        case NegIneq(l, r):
            return f"{render_term(l)} !<= {render_term(r)}"
        case MAnd(items):
            return " && ".join(_meta_wrap(x, (MAnd, MOr, MImp, *_QUANTS)) for x in items)
        case MOr(items):
            return " || ".join(_meta_wrap(x, (MOr, MImp, *_QUANTS)) for x in items)
        case MNot(b):
            return f"~~ {_meta_wrap(b, (MAnd, MOr, MImp))}"
        case MImp(a, c):
            return f"{_meta_wrap(a, (MImp, *_QUANTS))} ==> {render_meta(c)}"
        case Forall(b, body):
            return f"A {_binders((b,))}. {render_meta(body)}"
        case Exists(b, body):
            return f"E {_binders((b,))}. {render_meta(body)}"
        case RestrictedForall(bs, op, r, body):
            return f"A[{_binders(bs)} |> {op.name} {render_term(r)}]. {render_meta(body)}"
        case RestrictedExists(bs, op, r, body):
            return f"E[{_binders(bs)} |> {op.name} {render_term(r)}]. {render_meta(body)}"
    raise TypeError(mf)


def render(ast: Ast) -> str:
    """Canonical concrete syntax; ``parse(render(x)) == x``."""
    if isinstance(ast, (Inequality, NegIneq, MAnd, MOr, MNot, MImp, *_QUANTS)):
        return render_meta(ast)
    return render_term(ast)


_PRETTY_OPS: Final = {"/\\": "∧", "\\/": "∨", "<=": "≤", "!<=": "≰", "&&": "&", "||": "⅋",
                      "==>": "⇒", "->": "→", "<-": "←", ">-": ">‒", "-<": "‒<"}
_QUANT_SYMBOLS: Final = {"A": "∀", "E": "∃"}


def pretty(ast: Ast) -> str:
    """Best-effort unicode rendering for human readable reports."""
    text = render(ast)
    for ascii_op, uni in sorted(_PRETTY_OPS.items(), key=lambda kv: -len(kv[0])):
        text = text.replace(f" {ascii_op} ", f" {uni} ")
    text = re.sub(r"\bk\(", "κ(", text)
    text = re.sub(r"\bl\(", "λ(", text)
    text = re.sub(r"(?<![\w#*'])([AE])\[", lambda m: "(" + _QUANT_SYMBOLS[m.group(1)], text)
    return re.sub(r"(?<![\w#*'])([AE]) ", lambda m: _QUANT_SYMBOLS[m.group(1)], text)


# -- parsing -------------------------------------------------------------------------------

GRAMMAR: Final = r"""
    ?meta_start: meta
    ?term_start: term

    ?meta: mimp
    ?mimp: mor
         | mor "==>" mimp                                  -> mimp
    ?mor: mand
        | mor "||" mand                                    -> mor
    ?mand: mnot
         | mand "&&" mnot                                  -> mand
    ?mnot: "~~" mnot                                       -> mnot
         | quant
         | matom
    quant: "A" binder "." meta                             -> forall
         | "E" binder "." meta                             -> exists
         | "A" "[" binders "|>" opname term "]" "." meta   -> rforall
         | "E" "[" binders "|>" opname term "]" "." meta   -> rexists
    binders: binder ("," binder)*
    binder: NAME ":" "nom"                                 -> nom_binder
          | NAME ":" "conom"                               -> conom_binder
    opname: NAME | IMP_OP | REV_OP | LSUB_OP | RSUB_OP
    ?matom: term "<=" term                                 -> ineq
          | term "!<=" term                                -> negineq
          | "[" meta "]"

    ?term: imp
    ?imp: join
        | join IMP_OP imp                                  -> infix
        | join REV_OP join                                 -> infix
        | join LSUB_OP join                                -> infix
        | join RSUB_OP join                                -> infix
    ?join: meet
         | meet "\\/" join                                 -> join
    ?meet: atom
         | atom "/\\" meet                                 -> meet
    ?atom: NAME "(" [args] ")"                             -> app
         | NAME                                            -> name
         | NOMINAL                                         -> nominal
         | CONOMINAL                                       -> conominal
         | "top"                                           -> top
         | "bot"                                           -> bot
         | KAPPA term ")"                                  -> kappa
         | LAMBDA term ")"                                 -> lambda_
         | "(" term ")"
    args: term (","? term)*

    IMP_OP: "->"
    REV_OP: "<-"
    LSUB_OP: ">-"
    RSUB_OP: "-<"
    KAPPA.2: "k("
    LAMBDA.2: "l("
    NAME: /[A-Za-z_][A-Za-z0-9_']*(#[0-9]+)?/
    NOMINAL: /#[A-Za-z_][A-Za-z0-9_']*/
    CONOMINAL: /\*[A-Za-z_][A-Za-z0-9_']*/

    %import common.WS
    %ignore WS
"""

_PARSER: Lark | None = None


def _parser() -> Lark:
    global _PARSER
    if _PARSER is None:
        _PARSER = Lark(GRAMMAR, parser="lalr", start=["meta_start", "term_start"], maybe_placeholders=True)
    return _PARSER


_INFIX_CONNECTIVES: Final = {"->": IMP, "<-": REV_IMP, ">-": LEFT_SUB, "-<": RIGHT_SUB}


@v_args(inline=True)
class AstBuilder(Transformer):
    """Turns lark trees into AST nodes, resolving connectives against a signature."""

    def __init__(self, sig: Signature):
        super().__init__()
        self.sig = sig

    def _connective(self, name: str) -> Connective:
        if name in _INFIX_CONNECTIVES:
            return _INFIX_CONNECTIVES[name]
        return self.sig.lookup(name)

    # terms
    def name(self, tok):
        name = str(tok)
        if self.sig.has(name) and self.sig.lookup(name).arity == 0:
            return App(self.sig.lookup(name), ())
        if self.sig.has(name):
            c = self.sig.lookup(name)
            raise ArityException(name, c.arity, 0)
        return PropVar(name)

    def app(self, tok, args=None):
        c = self._connective(str(tok))
        args = tuple(args or ())
        if len(args) != c.arity:
            raise ArityException(c.name, c.arity, len(args))
        return App(c, args)

    def args(self, *items):
        return list(items)

    def nominal(self, tok):
        return Nominal(str(tok)[1:])

    def conominal(self, tok):
        return Conominal(str(tok)[1:])

    def top(self):
        return TOP

    def bot(self):
        return BOT

    def kappa(self, _tok, t):
        if sort_of(t) is not Sort.NOM:
            raise SortException(f"k(...) expects a nominal-sorted argument, got {render_term(t)}")
        return Kappa(t)

    def lambda_(self, _tok, t):
        if sort_of(t) is not Sort.CONOM:
            raise SortException(f"l(...) expects a conominal-sorted argument, got {render_term(t)}")
        return Lambda(t)

    def meet(self, l, r):
        return Meet(l, r)

    def join(self, l, r):
        return Join(l, r)

    def infix(self, l, tok, r):
        return App(_INFIX_CONNECTIVES[str(tok)], (l, r))

    # meta
    def ineq(self, l, r):
        return Inequality(l, r)

    def negineq(self, l, r):
        return NegIneq(l, r)

    def mand(self, a, b):
        return meta_and([a, b])

    def mor(self, a, b):
        return meta_or([a, b])

    def mnot(self, b):
        return MNot(b)

    def mimp(self, a, c):
        return MImp(a, c)

    def nom_binder(self, tok):
        return Binder(str(tok), Sort.NOM)

    def conom_binder(self, tok):
        return Binder(str(tok), Sort.CONOM)

    def binders(self, *bs):
        return tuple(bs)

    def opname(self, tok):
        return self._connective(str(tok))

    def forall(self, b, body):
        return Forall(b, body)

    def exists(self, b, body):
        return Exists(b, body)

    def _restricted(self, kind, bs, op, r, body):
        sorts = restricted_sorts(op)
        if len(bs) != op.arity:
            raise ArityException(op.name, op.arity, len(bs))
        if tuple(b.sort for b in bs) != sorts:
            raise SortException(f"restricted quantifier over {op.name} binds sorts "
                                f"{', '.join(s.value for s in sorts)}")
        expected = Sort.NOM if op.is_f else Sort.CONOM
        if sort_of(r) is not expected:
            raise SortException(f"restrictor {render_term(r)} of {op.name} must be {expected.value}-sorted")
        return kind(bs, op, r, body)

    def rforall(self, bs, op, r, body):
        return self._restricted(RestrictedForall, bs, op, r, body)

    def rexists(self, bs, op, r, body):
        return self._restricted(RestrictedExists, bs, op, r, body)


def _run(text: str, start: str, sig: Signature):
    tree = _parser().parse(text, start=start)
    try:
        return AstBuilder(expand_signature(sig)).transform(tree)
    except VisitError as e:
        raise e.orig_exc


def _syntax_error(text: str, e: UnexpectedInput) -> ParseException:
    pos = getattr(e, "pos_in_stream", None)
    if pos is not None and pos < 0:
        pos = len(text)
    return ParseException(f"Syntax error in {text!r}", pos)


def parse_meta(text: str, sig: Signature) -> MetaFormula:
    try:
        return _run(text, "meta_start", sig)
    except UnexpectedInput as e:
        raise _syntax_error(text, e)


def parse_term(text: str, sig: Signature) -> Term:
    try:
        return _run(text, "term_start", sig)
    except UnexpectedInput as e:
        raise _syntax_error(text, e)


def parse_inequality(text: str, sig: Signature) -> Inequality:
    result = parse_meta(text, sig)
    if not isinstance(result, Inequality):
        raise ParseException(f"Expected a single inequality: {text!r}")
    return result


def parse(text: str, sig: Signature) -> Ast:
    """Parse a meta-formula, an inequality or a bare term."""
    try:
        tree = _parser().parse(text, start="meta_start")
        start = "meta_start"
    except UnexpectedInput as meta_error:
        try:
            tree = _parser().parse(text, start="term_start")
            start = "term_start"
        except UnexpectedInput:
            raise _syntax_error(text, meta_error)
    LOGGER.debug("Parsed %r as %s", text, start)
    try:
        return AstBuilder(expand_signature(sig)).transform(tree)
    except VisitError as e:
        raise e.orig_exc


# -- alpha equivalence -----------------------------------------------------------------------

def _flatten(t: Term, kind: type) -> list[Term]:
    if isinstance(t, kind):
        return _flatten(t.left, kind) + _flatten(t.right, kind)
    return [t]


def _shape(t: Term) -> str:
    match t:
        case PropVar():
            return "p"
        case Nominal():
            return "#"
        case Conominal():
            return "*"
    kids = children(t)
    head = type(t).__name__ + (f":{t.op.name}" if isinstance(t, App) else "")
    return f"{head}({','.join(_shape(c) for c in kids)})"


def normalize_ac(t: Term) -> Term:
    """Flatten meet/join chains and order operands by shape."""
    kids = children(t)
    if not kids:
        return t
    if isinstance(t, (Meet, Join)):
        kind = type(t)
        ops = [normalize_ac(x) for x in _flatten(t, kind)]
        flat: list[Term] = []
        for x in ops:
            flat.extend(_flatten(x, kind))
        flat.sort(key=_shape)
        acc = flat[-1]
        for x in reversed(flat[:-1]):
            acc = kind(x, acc)
        return acc
    return rebuild(t, tuple(normalize_ac(c) for c in kids))


class _Renamer:
    def __init__(self):
        self.maps: dict[type, dict[str, str]] = {PropVar: {}, Nominal: {}, Conominal: {}}

    def var(self, v: Var) -> Var:
        table = self.maps[type(v)]
        if v.name not in table:
            table[v.name] = f"v{len(table)}"
        return type(v)(table[v.name])

    def term(self, t: Term) -> Term:
        if isinstance(t, (PropVar, Nominal, Conominal)):
            return self.var(t)
        kids = children(t)
        return rebuild(t, tuple(self.term(c) for c in kids)) if kids else t

    def binder(self, b: Binder) -> Binder:
        return Binder(self.var(b.var).name, b.sort)

    def meta(self, mf: MetaFormula) -> MetaFormula:
        match mf:
            case Inequality(l, r):
                return Inequality(self.term(l), self.term(r))
            case NegIneq(l, r):
                return NegIneq(self.term(l), self.term(r))
            case MAnd(items):
                return MAnd(tuple(self.meta(x) for x in items))
            case MOr(items):
                return MOr(tuple(self.meta(x) for x in items))
            case MNot(b):
                return MNot(self.meta(b))
            case MImp(a, c):
                return MImp(self.meta(a), self.meta(c))
            case Forall(b, body):
                return Forall(self.binder(b), self.meta(body))
            case Exists(b, body):
                return Exists(self.binder(b), self.meta(body))
            case RestrictedForall(bs, op, r, body):
                nbs = tuple(self.binder(b) for b in bs)
                return RestrictedForall(nbs, op, self.term(r), self.meta(body))
            case RestrictedExists(bs, op, r, body):
                nbs = tuple(self.binder(b) for b in bs)
                return RestrictedExists(nbs, op, self.term(r), self.meta(body))
        raise TypeError(mf)


def canonical(ast: Ast, modulo_ac: bool = True) -> Ast:
    """Canonical representative up to renaming (and meet/join AC when requested)."""
    if modulo_ac:
        ast = map_inequalities(ast, normalize_ac) if isinstance(
            ast, (Inequality, NegIneq, MAnd, MOr, MNot, MImp, *_QUANTS)) else normalize_ac(ast)
    r = _Renamer()
    if isinstance(ast, (Inequality, NegIneq, MAnd, MOr, MNot, MImp, *_QUANTS)):
        return r.meta(ast)
    return r.term(ast)


def alpha_equivalent(a: Ast, b: Ast, modulo_ac: bool = True) -> bool:
    return canonical(a, modulo_ac) == canonical(b, modulo_ac)
