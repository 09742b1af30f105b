"""Kracht formulas: representation, validation, refinement and the forward translation."""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Final, final

from core.exceptions import (
    InternalShapeException,
    NotDefiniteInductiveException,
    NotKrachtException,
    NotStrippableException,
)
from .alba import NON_DEFINITE, Reduction, run_alba
from .classifier import HoleKind, InductiveWitness
from .signature import Connective, Signature
from .syntax import (
    TOP,
    BOT,
    App,
    Binder,
    Bot,
    Conominal,
    Forall,
    FreshNames,
    Inequality,
    Join,
    Kappa,
    Lambda,
    MAnd,
    Meet,
    MetaFormula,
    MImp,
    MOr,
    NegIneq,
    Nominal,
    PureVar,
    RestrictedExists,
    RestrictedForall,
    Sign,
    Sort,
    Term,
    Top,
    all_names,
    children,
    free_pure_vars,
    meta_and,
    meta_or,
    pure_vars,
    render,
    restricted_sorts,
    rho,
    signed_positions,
    sort_of,
    substitute,
    substitute_meta,
)
from .trace import Trace

LOGGER: Final = logging.getLogger(__name__)


class QuantifierKind(str, Enum):
    PIVOTAL = "pivotal"
    ALIAS = "alias"
    TYPE1 = "type-1"
    TYPE2 = "type-2"


class Reason(str, Enum):
    NO_PIVOTAL = "no-pivotal"
    MULTI_PIVOTAL = "multi-pivotal"
    ALIAS = "alias-violation"
    POLARITY = "polarity-violation"
    QUANTIFIER_TYPE = "quantifier-type-violation"
    NON_UNIVERSAL_ATOM = "non-inherently-universal-atom-var"
    MALFORMED = "malformed"


def _fail(reason: Reason, detail: str = "") -> NotKrachtException:
    return NotKrachtException(reason.value, detail)


@final
@dataclass(frozen=True)
class QuantifierEntry:
    binders: tuple[Binder, ...]
    kind: QuantifierKind
    op: Connective | None = None
    restrictor: Term | None = None

    @property
    def restricted(self) -> bool:
        return self.op is not None

    @property
    def vars(self) -> tuple[PureVar, ...]:
        return tuple(b.var for b in self.binders)

    def wrap(self, body: MetaFormula) -> MetaFormula:
        if self.restricted:
            return RestrictedForall(self.binders, self.op, self.restrictor, body)
        for b in reversed(self.binders):
            body = Forall(b, body)
        return body


@final
@dataclass(frozen=True)
class KrachtDisjunct:
    body: MetaFormula
    main: Term


@final
@dataclass(frozen=True)
class KrachtForm:
    prefix: tuple[QuantifierEntry, ...]
    antecedent: tuple[Inequality, ...]
    pivotal: NegIneq
    disjuncts: tuple[KrachtDisjunct, ...]

    @property
    def pivots(self) -> tuple[Nominal, Conominal]:
        return self.pivotal.lhs, self.pivotal.rhs

    def entries(self, kind: QuantifierKind) -> list[QuantifierEntry]:
        return [e for e in self.prefix if e.kind is kind]

    @property
    def aliases(self) -> list[PureVar]:
        return [v for e in self.entries(QuantifierKind.ALIAS) for v in e.vars]

    def consequent(self) -> MetaFormula:
        if not self.disjuncts:
            return Inequality(TOP, BOT)
        return meta_or(d.body for d in self.disjuncts)

    def to_meta(self) -> MetaFormula:
        body: MetaFormula = MImp(meta_and([*self.antecedent, self.pivotal]), self.consequent())
        for entry in reversed(self.prefix):
            body = entry.wrap(body)
        return body


# -- validation ---------------------------------------------------------------------------------------

def is_rho_var(t: Term) -> bool:
    return isinstance(t, (Kappa, Lambda)) and isinstance(t.arg, (Nominal, Conominal))


def _is_var_term(t: Term) -> bool:
    return isinstance(t, (Nominal, Conominal)) or is_rho_var(t)


def _flat_side(t: Term) -> bool:
    if _is_var_term(t) or isinstance(t, (Top, Bot)):
        return True
    return isinstance(t, App) and all(_is_var_term(a) for a in t.args)


def is_flat(ineq: Inequality) -> bool:
    """``i <= op(vars)``, ``op(vars) <= n`` or ``u <= v``."""
    return bool(flat_mains(ineq))


def _var_terms(t: Term) -> list[Term]:
    if _is_var_term(t):
        return [t]
    if isinstance(t, App):
        return [a for a in t.args if _is_var_term(a)]
    return []


def flat_mains(ineq: Inequality) -> list[Term]:
    l, r = ineq.lhs, ineq.rhs
    mains = []
    if _is_var_term(l) and sort_of(l) is Sort.NOM and _flat_side(r) and not _mentions(r, l):
        mains.append(l)
    if _is_var_term(r) and sort_of(r) is Sort.CONOM and _flat_side(l) and not _mentions(l, r):
        mains.append(r)
    return mains


def _mentions(t: Term, w: Term) -> bool:
    return _base_var(w) in {_base_var(x) for x in _var_terms(t)}


def _base_var(t: Term) -> PureVar:
    return t.arg if isinstance(t, (Kappa, Lambda)) else t


class _DisjunctChecker:
    def __init__(self, inherent: set[PureVar], enforce_polarity: bool):
        self.inherent = inherent
        self.enforce_polarity = enforce_polarity

    def atom(self, ineq: Inequality, main: Term) -> None:
        main_var = _base_var(main)
        for root, sign in ((ineq.lhs, Sign.PLUS), (ineq.rhs, Sign.MINUS)):
            for path, node, s in signed_positions(root, sign):
                if not isinstance(node, (Nominal, Conominal)) or node == main_var:
                    continue
                if node not in self.inherent:
                    raise _fail(Reason.NON_UNIVERSAL_ATOM, f"{render(node)} in {render(ineq)}")
                if not self.enforce_polarity or _under_rho(root, path):
                    continue
                expected = Sign.MINUS if isinstance(node, Nominal) else Sign.PLUS
                if s is not expected:
                    raise _fail(Reason.POLARITY, f"{render(node)} in {render(ineq)}")

    def check(self, theta: MetaFormula, allowed: frozenset[Term] | None, same: bool = True) -> Term:
        """Main variable of ``theta``; ``allowed`` None admits any kappa/lambda variable."""
        match theta:
            case Inequality():
                mains = [m for m in flat_mains(theta) if self._ok(m, allowed)]
                if not mains:
                    raise _fail(Reason.MALFORMED, f"not a flat inequality on display: {render(theta)}")
                self.atom(theta, mains[0])
                return mains[0]
            case MAnd(items) | MOr(items):
                mains = [self.check(x, allowed, same) for x in items]
                if same and len(set(mains)) > 1:
                    raise _fail(Reason.MALFORMED, f"mixed main variables in {render(theta)}")
                return mains[0]
            case RestrictedExists(bs, _, r, body):
                if not self._ok(r, allowed):
                    raise _fail(Reason.MALFORMED, f"restrictor {render(r)} is not the main variable")
                self._no_main(body, r)
                self.check(body, frozenset(b.var for b in bs), same=False)
                return r
            case RestrictedForall(bs, _, r, body):
                w = rho(r)
                if not self._ok(w, allowed):
                    raise _fail(Reason.MALFORMED, f"restrictor {render(r)} is not the flipped main variable")
                self._no_main(body, w)
                self.check(body, frozenset(rho(b.var) for b in bs), same=False)
                return w
        raise _fail(Reason.MALFORMED, render(theta))

    @staticmethod
    def _ok(t: Term, allowed: frozenset[Term] | None) -> bool:
        return is_rho_var(t) if allowed is None else t in allowed

    @staticmethod
    def _no_main(body: MetaFormula, w: Term) -> None:
        if _base_var(w) in free_pure_vars(body):
            raise _fail(Reason.MALFORMED, f"main variable {render(w)} occurs below its quantifier")


def _under_rho(root: Term, path: tuple[int, ...]) -> bool:
    t = root
    for i in path:
        if isinstance(t, (Kappa, Lambda)):
            return True
        t = children(t)[i]
    return False


def flatten_meta(mf: MetaFormula, kind: type) -> list[MetaFormula]:
    if isinstance(mf, kind):
        return [y for x in mf.items for y in flatten_meta(x, kind)]
    return [mf]


def validate_kracht(mf: MetaFormula, enforce_polarity: bool = True) -> KrachtForm:
    """Parse a closed meta-formula into a KrachtForm, checking every shape condition."""
    raw_prefix: list[tuple[tuple[Binder, ...], Connective | None, Term | None]] = []
    body = mf
    while isinstance(body, (Forall, RestrictedForall)):
        if isinstance(body, Forall):
            raw_prefix.append(((body.binder,), None, None))
        else:
            raw_prefix.append((body.binders, body.op, body.restrictor))
        body = body.body
    if not isinstance(body, MImp):
        raise _fail(Reason.MALFORMED, "expected a universal prefix over an implication")

    items = flatten_meta(body.antecedent, MAnd)
    pivotal = [x for x in items if isinstance(x, NegIneq)]
    if not pivotal:
        raise _fail(Reason.NO_PIVOTAL)
    if len(pivotal) > 1:
        raise _fail(Reason.MULTI_PIVOTAL, ", ".join(render(p) for p in pivotal))
    piv = pivotal[0]
    if not (isinstance(piv.lhs, Nominal) and isinstance(piv.rhs, Conominal)):
        raise _fail(Reason.NO_PIVOTAL, f"{render(piv)} is not j !<= m")
    antecedent = [x for x in items if not isinstance(x, NegIneq)]
    for a in antecedent:
        nominal_pair = isinstance(a, Inequality) and isinstance(a.lhs, Nominal) and isinstance(a.rhs, Nominal)
        conominal_pair = isinstance(a, Inequality) and isinstance(a.lhs, Conominal) and isinstance(a.rhs, Conominal)
        if not (nominal_pair or conominal_pair):
            raise _fail(Reason.ALIAS, f"antecedent inequality {render(a)}")

    consequent = body.consequent
    plain = [b.var for bs, op, _ in raw_prefix if op is None for b in bs]
    if piv.lhs not in plain or piv.rhs not in plain:
        raise _fail(Reason.NO_PIVOTAL, "pivotal variables must be plainly quantified")
    cons_vars = free_pure_vars(consequent)
    ante_vars = {v for a in antecedent for v in pure_vars(a.lhs) + pure_vars(a.rhs)}

    for v in plain:
        if v in (piv.lhs, piv.rhs):
            continue
        if isinstance(v, Nominal):
            count = sum(1 for a in antecedent if a.rhs == v)
        else:
            count = sum(1 for a in antecedent if a.lhs == v)
        if count != 1:
            raise _fail(Reason.ALIAS, f"{render(v)} must be displayed in exactly one antecedent inequality")

    prefix: list[QuantifierEntry] = []
    for idx, (bs, op, restrictor) in enumerate(raw_prefix):
        if op is None:
            v = bs[0].var
            kind = QuantifierKind.PIVOTAL if v in (piv.lhs, piv.rhs) else QuantifierKind.ALIAS
            prefix.append(QuantifierEntry(bs, kind))
            continue
        later_restrictors = [pure_vars(r) for _, o, r in raw_prefix[idx + 1:] if o is not None]
        bound = [b.var for b in bs]
        in_cons = any(v in cons_vars for v in bound)
        elsewhere = any(v in ante_vars or any(v in rs for rs in later_restrictors) for v in bound)
        if in_cons and elsewhere:
            raise _fail(Reason.QUANTIFIER_TYPE, ", ".join(b.name for b in bs))
        if not in_cons and any(sum(v in rs for rs in later_restrictors) > 1 for v in bound):
            raise _fail(Reason.QUANTIFIER_TYPE, ", ".join(b.name for b in bs))
        prefix.append(QuantifierEntry(bs, QuantifierKind.TYPE1 if in_cons else QuantifierKind.TYPE2, op, restrictor))

    inherent = {v for e in prefix for v in e.vars}
    checker = _DisjunctChecker(inherent, enforce_polarity)
    disjuncts = []
    if consequent != Inequality(TOP, BOT):
        for theta in flatten_meta(consequent, MOr):
            disjuncts.append(KrachtDisjunct(theta, checker.check(theta, None)))
    return KrachtForm(tuple(prefix), tuple(antecedent), piv, tuple(disjuncts))


def from_meta(mf: MetaFormula, enforce_polarity: bool = True) -> KrachtForm:
    return validate_kracht(mf, enforce_polarity)


# -- refinement ---------------------------------------------------------------------------------------------

def _consequent_vars(kf: KrachtForm) -> set[PureVar]:
    return free_pure_vars(kf.consequent())


def _restrictor_vars(kf: KrachtForm) -> set[PureVar]:
    return {v for e in kf.prefix if e.restricted for v in pure_vars(e.restrictor)}


def refine(kf: KrachtForm, fresh: FreshNames | None = None) -> KrachtForm:
    """Keep pivots out of the consequent and drop aliases and type-1 quantifiers it does not use."""
    fresh = fresh or FreshNames(all_names(kf.to_meta()))
    j, m = kf.pivots
    cons = _consequent_vars(kf)
    antecedent = list(kf.antecedent)
    renames: dict[PureVar, PureVar] = {}
    if j in cons:
        renames[j] = fresh.nominal("h")
        antecedent.append(Inequality(j, renames[j]))
    if m in cons:
        renames[m] = fresh.conominal("o")
        antecedent.append(Inequality(renames[m], m))
    disjuncts = kf.disjuncts
    prefix = list(kf.prefix)
    if renames:
        disjuncts = tuple(KrachtDisjunct(substitute_meta(d.body, renames), substitute(d.main, renames))
                          for d in kf.disjuncts)
        pivots = [e for e in prefix if e.kind is QuantifierKind.PIVOTAL]
        fresh_aliases = [QuantifierEntry((Binder(v.name, Sort.NOM if isinstance(v, Nominal) else Sort.CONOM),),
                                         QuantifierKind.ALIAS) for v in renames.values()]
        prefix = pivots + fresh_aliases + [e for e in prefix if e.kind is not QuantifierKind.PIVOTAL]
        cons = free_pure_vars(meta_or(d.body for d in disjuncts)) if disjuncts else set()
    result = KrachtForm(tuple(prefix), tuple(antecedent), kf.pivotal, disjuncts)

    restrictors = _restrictor_vars(result)
    type2 = {v for e in result.prefix if e.kind is QuantifierKind.TYPE2 for v in e.vars}
    keep_prefix = []
    keep_ante = list(result.antecedent)
    for e in result.prefix:
        if e.kind is QuantifierKind.ALIAS:
            v = e.vars[0]
            links = [a for a in keep_ante if v in (a.lhs, a.rhs)]
            # an alias bounding a type-2 variable still fixes that variable's value
            linked_type2 = any(x in type2 for a in links for x in (a.lhs, a.rhs) if x != v)
            if v not in cons and v not in restrictors and len(links) == 1 and not linked_type2:
                keep_ante = [a for a in keep_ante if v not in (a.lhs, a.rhs)]
                LOGGER.debug("Dropping unused alias %s", v.name)
                continue
        if e.kind is QuantifierKind.TYPE1 and not any(v in cons for v in e.vars) \
                and not any(v in restrictors for v in e.vars):
            LOGGER.debug("Dropping unused type-1 quantifier over %s", ", ".join(b.name for b in e.binders))
            continue
        keep_prefix.append(e)
    return KrachtForm(tuple(keep_prefix), tuple(keep_ante), result.pivotal, result.disjuncts)


# -- stripping -----------------------------------------------------------------------------------------------

def _coordinate_binders(op: Connective, fresh: FreshNames, prefixes: tuple[str, str]) -> tuple[Binder, ...]:
    return tuple(Binder(fresh.name(prefixes[0] if s is Sort.NOM else prefixes[1]), s) for s in restricted_sorts(op))


def _var_side(ineq: Inequality, main: Term | None) -> str | None:
    """'lhs' when the displayed variable is nominal-sorted on the left, 'rhs' when conominal-sorted on the right."""
    if main is not None:
        return "lhs" if ineq.lhs == main else "rhs" if ineq.rhs == main else None
    if _is_var_term(ineq.lhs) and sort_of(ineq.lhs) is Sort.NOM:
        return "lhs"
    if _is_var_term(ineq.rhs) and sort_of(ineq.rhs) is Sort.CONOM:
        return "rhs"
    return None


def strip_flat(ineq: Inequality, fresh: FreshNames | None = None, main: Term | None = None,
               prefixes: tuple[str, str] = ("i", "n")) -> MetaFormula:
    """Strip operators off the side facing ``main`` until every inequality is flat."""
    fresh = fresh or FreshNames(all_names(ineq))
    side = _var_side(ineq, main)
    if side is None:
        raise NotStrippableException(render(ineq))
    w, t = (ineq.lhs, ineq.rhs) if side == "lhs" else (ineq.rhs, ineq.lhs)
    if w in flat_mains(ineq):
        return ineq
    nominal_side = side == "lhs"

    def sub(a: Term, b: Term, v: Term) -> MetaFormula:
        return strip_flat(Inequality(a, b), fresh, v, prefixes)

    match t:
        case Meet(a, b):
            if nominal_side:
                return meta_and([sub(w, a, w), sub(w, b, w)])
            return meta_or([sub(a, w, w), sub(b, w, w)])
        case Join(a, b):
            if nominal_side:
                return meta_or([sub(w, a, w), sub(w, b, w)])
            return meta_and([sub(a, w, w), sub(b, w, w)])
        case App(op, args) if args:
            binders = _coordinate_binders(op, fresh, prefixes)
            existential = op.is_f == nominal_side
            parts = []
            for b, arg in zip(binders, args):
                u = b.var if existential else rho(b.var)
                parts.append(sub(u, arg, u) if sort_of(u) is Sort.NOM else sub(arg, u, u))
            if existential:
                return RestrictedExists(binders, op, w, meta_and(parts))
            return RestrictedForall(binders, op, rho(w), meta_or(parts))
    raise NotStrippableException(render(ineq))


@final
@dataclass
class _AntecedentStrip:
    fresh: FreshNames
    existentials: list[QuantifierEntry]
    flat: list[Inequality]

    def run(self, ineq: Inequality, w: PureVar) -> None:
        if w in flat_mains(ineq):
            self.flat.append(ineq)
            return
        nominal_side = ineq.lhs == w
        t = ineq.rhs if nominal_side else ineq.lhs
        if nominal_side and isinstance(t, Meet):
            self.run(Inequality(w, t.left), w)
            self.run(Inequality(w, t.right), w)
            return
        if not nominal_side and isinstance(t, Join):
            self.run(Inequality(t.left, w), w)
            self.run(Inequality(t.right, w), w)
            return
        if not (isinstance(t, App) and t.args and t.op.is_f == nominal_side):
            raise NotStrippableException(render(ineq))
        binders = _coordinate_binders(t.op, self.fresh, ("h", "o"))
        self.existentials.append(QuantifierEntry(binders, QuantifierKind.TYPE2, t.op, w))
        for b, arg in zip(binders, t.args):
            self.run(Inequality(b.var, arg) if b.sort is Sort.NOM else Inequality(arg, b.var), b.var)


def _restricting_args(ineq: Inequality) -> tuple[App, Term] | None:
    if isinstance(ineq.rhs, App) and ineq.rhs.op.is_f and ineq.rhs.args and sort_of(ineq.lhs) is Sort.NOM:
        return ineq.rhs, ineq.lhs
    if isinstance(ineq.lhs, App) and ineq.lhs.op.is_g and ineq.lhs.args and sort_of(ineq.rhs) is Sort.CONOM:
        return ineq.lhs, ineq.rhs
    return None


def _hole_vars(r: Reduction, kind: HoleKind) -> set[PureVar]:
    return {r.hole_vars[h.name] for h in r.decomposition.of_kind(kind)}


def kracht_from_reduction(r: Reduction, fresh: FreshNames) -> KrachtForm:
    """Contrapose the approximated quasi-inequality, insert the pivots and strip both sides."""
    gammas, deltas = _hole_vars(r, HoleKind.GAMMA), _hole_vars(r, HoleKind.DELTA)
    fresh.reserve(v.name for v in r.hole_vars.values())

    disjuncts = []
    for a in r.quasi.antecedent:
        if a.lhs in gammas:
            main = rho(a.lhs)
            theta = Inequality(a.rhs, main)
        elif a.rhs in deltas:
            main = rho(a.rhs)
            theta = Inequality(main, a.lhs)
        else:
            raise InternalShapeException(f"unexpected antecedent {render(a)}")
        disjuncts.append(KrachtDisjunct(strip_flat(theta, fresh, main), main))

    phi, psi = r.quasi.consequent.lhs, r.quasi.consequent.rhs
    j = phi if isinstance(phi, Nominal) else fresh.nominal("j")
    m = psi if isinstance(psi, Conominal) else fresh.conominal("m")
    strip = _AntecedentStrip(fresh, [], [])
    if j != phi:
        strip.run(Inequality(j, phi), j)
    if m != psi:
        strip.run(Inequality(psi, m), m)

    ordered = list(dict.fromkeys(r.hole_vars[h.name] for h in r.decomposition.holes))
    plain = [v for v in ordered if v not in (j, m)]
    type1: list[QuantifierEntry] = []
    aliases: list[Inequality] = []
    for ineq in strip.flat:
        hit = _restricting_args(ineq)
        if hit is None:
            aliases.append(ineq)
            continue
        app, restrictor = hit
        others = [x for x in strip.flat if x is not ineq]
        bound = app.args
        claimable = (
            len(set(bound)) == len(bound)
            and all(v in plain for v in bound)
            and not any(v in pure_vars(x.lhs) + pure_vars(x.rhs) for v in bound for x in others)
        )
        if not claimable:
            raise InternalShapeException(f"cannot turn {render(ineq)} into a restricted quantifier")
        binders = tuple(Binder(v.name, Sort.NOM if isinstance(v, Nominal) else Sort.CONOM) for v in bound)
        type1.append(QuantifierEntry(binders, QuantifierKind.TYPE1, app.op, restrictor))
        plain = [v for v in plain if v not in bound]

    def entry(v: PureVar, kind: QuantifierKind) -> QuantifierEntry:
        return QuantifierEntry((Binder(v.name, Sort.NOM if isinstance(v, Nominal) else Sort.CONOM),), kind)

    prefix = (entry(j, QuantifierKind.PIVOTAL), entry(m, QuantifierKind.PIVOTAL),
              *(entry(v, QuantifierKind.ALIAS) for v in plain), *strip.existentials, *type1)
    return KrachtForm(prefix, tuple(aliases), NegIneq(j, m), tuple(disjuncts))


def kracht_pieces(ineq: Inequality, sig: Signature, refined: bool = False,
                  witness: InductiveWitness | None = None, trace: Trace | None = None) -> list[KrachtForm]:
    """One Kracht form per preprocessed piece of ``ineq``."""
    trace = trace or Trace(enabled=False)
    run = run_alba(ineq, sig, witness=witness, share=False, trace=trace.enabled)
    trace.extend(run.trace)
    fresh = FreshNames(all_names(ineq))
    forms = []
    for reduction in run.reductions:
        if NON_DEFINITE in reduction.flags:
            raise NotDefiniteInductiveException(f"{render(reduction.item)} has no definite shape after preprocessing")
        fresh.reserve(all_names(reduction.quasi.to_meta()))
        kf = kracht_from_reduction(reduction, fresh)
        validate_kracht(kf.to_meta())
        LOGGER.info("Kracht form for %s: %s", render(reduction.item), render(kf.to_meta()))
        trace.record("kracht", "kracht-form", reduction.quasi.to_meta(), kf.to_meta())
        if refined:
            before, kf = kf, refine(kf, fresh)
            trace.record("kracht", "refine", before.to_meta(), kf.to_meta())
        forms.append(kf)
    return forms


def inductive_to_kracht(ineq: Inequality, sig: Signature, refined: bool = False,
                        witness: InductiveWitness | None = None) -> KrachtForm:
    forms = kracht_pieces(ineq, sig, refined, witness)
    if len(forms) != 1:
        raise NotDefiniteInductiveException(
            f"preprocessing splits {render(ineq)} into {len(forms)} inequalities; translate them separately")
    return forms[0]
