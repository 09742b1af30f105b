"""Inverse correspondence: from Kracht formulas back to (crypto-)inductive inequalities."""
import logging
from dataclasses import dataclass, field
from typing import Final, final

from core.exceptions import (
    InternalShapeException,
    NotCryptoInductiveException,
    NotPIAException,
)
from .alba import Mode, la_ra
from .classifier import InductiveWitness, is_crypto_inductive
from .kracht import (
    KrachtDisjunct,
    KrachtForm,
    QuantifierKind,
    flat_mains,
    flatten_meta,
    refine,
    validate_kracht,
)
from .signature import Polarity, Signature
from .syntax import (
    App,
    Binder,
    Conominal,
    Forall,
    FreshNames,
    Inequality,
    Kappa,
    Lambda,
    MAnd,
    MetaFormula,
    MImp,
    MOr,
    Nominal,
    PropVar,
    PureVar,
    RestrictedExists,
    RestrictedForall,
    Sign,
    Sort,
    Term,
    TOP,
    BOT,
    all_names,
    count_occurrences,
    forall_all,
    free_pure_vars,
    join_all,
    meet_all,
    meta_and,
    polarity_of_occurrences,
    positions,
    prop_vars,
    pure_vars,
    render,
    replace_at,
    restricting_inequality,
    rho,
    sign_at,
    signed_positions,
    subterm,
    substitute,
    substitute_ineq,
)
from .trace import Trace

LOGGER: Final = logging.getLogger(__name__)

NO_L_EQUIVALENT: Final = "no-L-equivalent-found"


# -- compaction ---------------------------------------------------------------------------------------

def _nominal_side(main: Term, ineq: Inequality) -> bool:
    return ineq.lhs == main


def _other(main: Term, ineq: Inequality) -> Term:
    return ineq.rhs if _nominal_side(main, ineq) else ineq.lhs


def _merge(main: Term, ineqs: list[Inequality], conjunctive: bool) -> Inequality:
    """Inverse splitting: several inequalities displaying ``main`` become one."""
    if len(ineqs) == 1:
        return ineqs[0]
    nominal = _nominal_side(main, ineqs[0])
    others = [_other(main, i) for i in ineqs]
    if nominal:
        return Inequality(main, meet_all(others) if conjunctive else join_all(others))
    return Inequality(join_all(others) if conjunctive else meet_all(others), main)


def _grouped(parts: list[tuple[Term, Inequality]]) -> dict[Term, list[Inequality]]:
    groups: dict[Term, list[Inequality]] = {}
    for main, ineq in parts:
        groups.setdefault(main, []).append(ineq)
    return groups


def _default(var: PureVar) -> Term:
    return TOP if isinstance(var, Nominal) else BOT


class _Compactor:
    def __init__(self, trace: Trace):
        self.trace = trace

    def run(self, theta: MetaFormula, allowed: frozenset[Term] | None) -> tuple[Term, Inequality]:
        match theta:
            case Inequality():
                mains = [m for m in flat_mains(theta) if allowed is None or m in allowed]
                if not mains:
                    raise InternalShapeException(f"no main variable on display in {render(theta)}")
                return mains[0], theta
            case MAnd(items) | MOr(items):
                parts = [self.run(x, allowed) for x in items]
                groups = _grouped(parts)
                if len(groups) > 1:
                    raise InternalShapeException(f"mixed main variables in {render(theta)}")
                main, ineqs = next(iter(groups.items()))
                result = _merge(main, ineqs, isinstance(theta, MAnd))
                self.trace.record("compaction", "inverse-splitting", theta, result)
                return main, result
            case RestrictedExists(bs, op, r, body):
                values = self._values(bs, flatten_meta(body, MAnd), lambda v: v, conjunctive=True)
                app = App(op, tuple(values))
                result = Inequality(r, app) if op.is_f else Inequality(app, r)
                self.trace.record("compaction", "inverse-existential", theta, result)
                return r, result
            case RestrictedForall(bs, op, r, body):
                values = self._values(bs, flatten_meta(body, MOr), rho, conjunctive=False)
                w = rho(r)
                app = App(op, tuple(values))
                result = Inequality(app, w) if op.is_f else Inequality(w, app)
                self.trace.record("compaction", "inverse-universal", theta, result)
                return w, result
        raise InternalShapeException(f"cannot compact {render(theta)}")

    def _values(self, binders: tuple[Binder, ...], items: list[MetaFormula], main_of, conjunctive: bool) -> list[Term]:
        mains = {main_of(b.var): b.var for b in binders}
        groups = _grouped([self.run(x, frozenset(mains)) for x in items])
        values = []
        for main, var in mains.items():
            ineqs = groups.get(main)
            values.append(_other(main, _merge(main, ineqs, conjunctive)) if ineqs else _default(var))
        return values


def disjunct_compaction(theta: KrachtDisjunct | MetaFormula, main: Term | None = None,
                        trace: Trace | None = None) -> Inequality:
    """Fold a stripped disjunct back into a single inequality displaying its main variable."""
    if isinstance(theta, KrachtDisjunct):
        theta, main = theta.body, theta.main
    got, ineq = _Compactor(trace or Trace(enabled=False)).run(theta, None if main is None else frozenset({main}))
    if main is not None and got != main:
        raise InternalShapeException(f"{render(ineq)} displays {render(got)} instead of {render(main)}")
    if main is not None and main in pure_vars(_other(main, ineq)):
        raise InternalShapeException(f"{render(main)} occurs on both sides of {render(ineq)}")
    return ineq


@dataclass
class CompactionState:
    kracht: KrachtForm
    disjuncts: list[tuple[Term, Inequality]] = field(default_factory=list)
    phi: Term | None = None
    psi: Term | None = None
    trace: Trace = field(default_factory=Trace)


def compact_consequent(state: CompactionState) -> CompactionState:
    for d in state.kracht.disjuncts:
        state.disjuncts.append((d.main, disjunct_compaction(d, trace=state.trace)))
    return state


def compact_antecedent(state: CompactionState) -> CompactionState:
    """Ackermann away the type-2 existentials, then merge what the pivots display."""
    kf = state.kracht
    alive: list[Inequality | None] = list(kf.antecedent)
    owner: dict[int, int] = {}
    for n, e in enumerate(kf.prefix):
        if e.restricted:
            alive.append(restricting_inequality(e.binders, e.op, e.restrictor))
            owner[n] = len(alive) - 1

    for n in reversed(range(len(kf.prefix))):
        entry = kf.prefix[n]
        if entry.kind is not QuantifierKind.TYPE2:
            continue
        own = owner[n]
        bindings: dict[PureVar, Term] = {}
        for u in entry.vars:
            nominal = isinstance(u, Nominal)
            hits = [k for k, a in enumerate(alive)
                    if a is not None and k != own and (a.lhs == u if nominal else a.rhs == u)]
            for k, a in enumerate(alive):
                if a is None or k == own or k in hits:
                    continue
                if u in pure_vars(a.lhs) + pure_vars(a.rhs):
                    raise InternalShapeException(f"{render(u)} is not in Ackermann shape in {render(a)}")
            sides = [alive[k].rhs if nominal else alive[k].lhs for k in hits]
            bindings[u] = (meet_all(sides) if nominal else join_all(sides)) if sides else (TOP if nominal else BOT)
            for k in hits:
                alive[k] = None
        before = alive[own]
        alive[own] = substitute_ineq(before, bindings)
        state.trace.record("compaction", "restricted-ackermann", before, alive[own],
                           ", ".join(f"{v.name} := {render(t)}" for v, t in bindings.items()))

    j, m = kf.pivots
    rest = [a for a in alive if a is not None]
    phis = [a.rhs for a in rest if a.lhs == j]
    psis = [a.lhs for a in rest if a.rhs == m]
    leftover = [a for a in rest if a.lhs != j and a.rhs != m]
    if leftover:
        raise InternalShapeException("antecedent leftovers " + "; ".join(render(a) for a in leftover))
    state.phi, state.psi = meet_all(phis), join_all(psis)
    state.trace.record("compaction", "inverse-splitting", rest, Inequality(state.phi, state.psi))
    return state


def _condition(main: Term, ineq: Inequality) -> Inequality:
    """Negated disjunct: not(x <= k(k)) is k <= x, not(l(l) <= x) is x <= l."""
    if isinstance(main, Kappa):
        return Inequality(main.arg, ineq.lhs)
    if isinstance(main, Lambda):
        return Inequality(ineq.rhs, main.arg)
    raise InternalShapeException(f"disjunct main {render(main)} is not a kappa/lambda variable")


def eliminate_pivotal(state: CompactionState) -> MetaFormula:
    """Drop the pivots: the compacted Kracht formula becomes a universal quasi-inequality."""
    if state.phi is None:
        compact_antecedent(state)
    groups: dict[Term, list[Inequality]] = {}
    for main, ineq in state.disjuncts:
        cond = _condition(main, ineq)
        key = cond.lhs if isinstance(main, Kappa) else cond.rhs
        groups.setdefault(key, []).append(cond)
    conditions = [_merge(v, conds, conjunctive=True) for v, conds in groups.items()]
    conclusion = Inequality(state.phi, state.psi)
    body: MetaFormula = MImp(meta_and(conditions), conclusion) if conditions else conclusion
    free = free_pure_vars(body)
    order = [v for e in state.kracht.prefix for v in e.vars if v in free]
    order += sorted((v for v in free if v not in order), key=lambda v: v.name)
    result = forall_all([Binder(v.name, Sort.NOM if isinstance(v, Nominal) else Sort.CONOM) for v in order], body)
    state.trace.record("pivotal", "pivot-elimination", state.kracht.to_meta(), result)
    return result


# -- very simple Sahlqvist ------------------------------------------------------------------------------

def _peel(mf: MetaFormula) -> tuple[list[Inequality], Inequality]:
    while isinstance(mf, Forall):
        mf = mf.body
    if isinstance(mf, Inequality):
        return [], mf
    if isinstance(mf, MImp) and isinstance(mf.consequent, Inequality):
        conds = flatten_meta(mf.antecedent, MAnd)
        if all(isinstance(c, Inequality) for c in conds):
            return conds, mf.consequent
    raise InternalShapeException(f"not a pivot-free quasi-inequality: {render(mf)}")


def rename_pure(t: Term) -> Term:
    """Nominals ``x`` become ``p_x``, conominals ``x`` become ``q_x``."""
    bindings = {v: PropVar(f"{'p' if isinstance(v, Nominal) else 'q'}_{v.name}") for v in pure_vars(t)}
    return substitute(t, bindings)


def to_very_simple_sahlqvist(mf: MetaFormula, trace: Trace | None = None) -> Inequality:
    """Substitute the conditions away and read the pure variables as proposition variables.

    A condition ``#h <= *o`` between two variables of the conclusion identifies both with one
    proposition variable.
    """
    trace = trace or Trace(enabled=False)
    conditions, conclusion = _peel(mf)
    bindings: dict[PureVar, Term] = {}
    shared: dict[PureVar, Term] = {}

    def occurs_as(var: PureVar, expected: Sign) -> None:
        signs = (polarity_of_occurrences(Sign.PLUS, conclusion.lhs, var)
                 + polarity_of_occurrences(Sign.MINUS, conclusion.rhs, var))
        if any(s is not expected for s in signs):
            raise InternalShapeException(f"{render(var)} has the wrong polarity in {render(conclusion)}")

    for c in conditions:
        if isinstance(c.lhs, Nominal) and isinstance(c.rhs, Conominal):
            in_conclusion = pure_vars(conclusion.lhs) + pure_vars(conclusion.rhs)
            if c.lhs not in in_conclusion or c.rhs not in in_conclusion:
                raise InternalShapeException(f"condition {render(c)} links a variable the conclusion lacks")
            for var in (c.lhs, c.rhs):
                if var in bindings or var in shared:
                    raise InternalShapeException(f"{render(var)} is constrained twice")
            occurs_as(c.lhs, Sign.PLUS)
            occurs_as(c.rhs, Sign.MINUS)
            q = PropVar(f"p_{c.lhs.name}")
            shared[c.lhs] = shared[c.rhs] = q
            continue
        if isinstance(c.lhs, Nominal) and c.lhs not in pure_vars(c.rhs):
            var, value, expected = c.lhs, c.rhs, Sign.PLUS
        elif isinstance(c.rhs, Conominal) and c.rhs not in pure_vars(c.lhs):
            var, value, expected = c.rhs, c.lhs, Sign.MINUS
        else:
            raise InternalShapeException(f"condition {render(c)} displays no variable")
        if var in bindings or var in shared:
            raise InternalShapeException(f"{render(var)} is constrained twice")
        occurs_as(var, expected)
        bindings[var] = value
    for var, value in bindings.items():
        if any(v in bindings for v in pure_vars(value)):
            raise InternalShapeException(f"conditions are not independent: {render(var)} := {render(value)}")
    bindings = {var: substitute(value, shared) for var, value in bindings.items()}
    substituted = substitute_ineq(substitute_ineq(conclusion, shared), bindings)
    if any(isinstance(n, (Kappa, Lambda)) for side in (substituted.lhs, substituted.rhs) for _, n in positions(side)):
        raise InternalShapeException(f"kappa/lambda left in {render(substituted)}")
    result = Inequality(rename_pure(substituted.lhs), rename_pure(substituted.rhs))
    trace.record("very-simple", "substitute-conditions", mf, result)
    return result


# -- unpacking ------------------------------------------------------------------------------------------------

def _in_base(ineq: Inequality, sig: Signature) -> bool:
    for side in (ineq.lhs, ineq.rhs):
        for _, node in positions(side):
            if isinstance(node, (Kappa, Lambda, Nominal, Conominal)):
                return False
            if isinstance(node, App) and not sig.is_base(node.op):
                return False
    return True


@final
@dataclass(frozen=True)
class _Occurrence:
    side: int
    path: tuple[int, ...]
    sign: Sign


_ROOT_SIGNS: Final = (Sign.PLUS, Sign.MINUS)


def _sides(ineq: Inequality) -> list[Term]:
    return [ineq.lhs, ineq.rhs]


def _extraction_root(root: Term, occ: _Occurrence, critical: list[_Occurrence], sig: Signature) -> tuple[int, ...] | None:
    """Topmost non-base node above ``occ`` that keeps clear of the critical occurrence."""
    for depth in range(len(occ.path)):
        prefix = occ.path[:depth]
        node = subterm(root, prefix)
        if not isinstance(node, App) or sig.is_base(node.op):
            continue
        if any(c.side == occ.side and c.path[:depth] == prefix for c in critical):
            continue
        return prefix
    return None


def _unpack_variable(ineq: Inequality, var: str, polarity: Polarity, sig: Signature,
                     fresh: FreshNames, trace: Trace) -> Inequality:
    target = PropVar(var)
    critical_sign = Sign.PLUS if polarity is Polarity.POSITIVE else Sign.MINUS
    occurrences = [_Occurrence(k, path, s)
                   for k, (root, sign) in enumerate(zip(_sides(ineq), _ROOT_SIGNS))
                   for path, node, s in signed_positions(root, sign) if node == target]
    critical = [o for o in occurrences if o.sign is critical_sign]
    others = [o for o in occurrences if o.sign is not critical_sign]
    roots = {o: _extraction_root(_sides(ineq)[o.side], o, critical, sig) for o in others}
    if all(r is None for r in roots.values()):
        return ineq
    if len(critical) != 1:
        raise NotCryptoInductiveException(f"{var} has {len(critical)} critical occurrences in {render(ineq)}")

    sides = _sides(ineq)
    extracted: dict[tuple[int, tuple[int, ...]], Term] = {}
    for o, spath in roots.items():
        spath = o.path if spath is None else spath
        if (o.side, spath) in extracted:
            raise NotCryptoInductiveException(f"{var} occurs twice below {render(subterm(sides[o.side], spath))}")
        s = subterm(sides[o.side], spath)
        if count_occurrences(target, s) != 1:
            raise NotCryptoInductiveException(f"{var} occurs more than once in {render(s)}")
        sigma = sign_at(sides[o.side], _ROOT_SIGNS[o.side], spath)
        r = fresh.prop("r")
        mode = Mode.RA if sigma is Sign.MINUS else Mode.LA
        try:
            sol = la_ra(s, o.path[len(spath):], mode, sig, u=r, trace=trace)
        except NotPIAException as e:
            raise NotCryptoInductiveException(str(e)) from e
        if sol.side or sol.lower != (polarity is Polarity.NEGATIVE):
            raise NotCryptoInductiveException(f"cannot extract {var} from {render(s)}")
        extracted[(o.side, spath)] = sol.bound
        sides[o.side] = replace_at(sides[o.side], spath, r)

    bounds = list(extracted.values())
    crit = critical[0]
    value = meet_all(bounds) if polarity is Polarity.POSITIVE else join_all(bounds)
    sides[crit.side] = replace_at(sides[crit.side], crit.path, value)
    result = Inequality(sides[0], sides[1])
    trace.record("unpacking", "extract-noncritical", ineq, result, f"{var} := {render(value)}")
    return result


def unpack_crypto(ineq: Inequality, sig: Signature, witness: InductiveWitness | None = None,
                  trace: Trace | None = None) -> Inequality:
    """Rewrite a crypto-inductive inequality into an equivalent one over the base connectives."""
    trace = trace or Trace(enabled=False)
    if _in_base(ineq, sig):
        return ineq
    witness = witness or is_crypto_inductive(ineq, sig)
    if witness is None:
        raise NotCryptoInductiveException(f"{render(ineq)} is not crypto-inductive")
    fresh = FreshNames(all_names(ineq))
    current = ineq
    for var in reversed(witness.elimination_order(prop_vars(ineq))):
        current = _unpack_variable(current, var, witness.polarity(var), sig, fresh, trace)
    if not _in_base(current, sig):
        raise NotCryptoInductiveException(f"residual non-base connectives in {render(current)}")
    LOGGER.debug("Unpacked %s into %s", render(ineq), render(current))
    return current


# -- pipeline ---------------------------------------------------------------------------------------------

@dataclass
class InverseRun:
    input: MetaFormula
    kracht: KrachtForm
    compaction: CompactionState
    pivot_free: MetaFormula
    very_simple: Inequality
    inductive: Inequality | None
    witness: InductiveWitness | None
    trace: Trace
    flags: list[str] = field(default_factory=list)


def inverse_alba(mf: MetaFormula, sig: Signature, enforce_polarity: bool = True, trace: bool = True) -> InverseRun:
    """Kracht formula to very simple Sahlqvist inequality, then to an inequality in the base language."""
    log = Trace(enabled=trace)
    kf = refine(validate_kracht(mf, enforce_polarity))
    log.record("refinement", "refine", mf, kf.to_meta())
    state = compact_antecedent(compact_consequent(CompactionState(kf, trace=log)))
    pivot_free = eliminate_pivotal(state)
    vss = to_very_simple_sahlqvist(pivot_free, log)
    flags: list[str] = []
    inductive: Inequality | None = None
    witness = is_crypto_inductive(vss, sig)
    if witness is None:
        flags.append(NO_L_EQUIVALENT)
    else:
        try:
            inductive = unpack_crypto(vss, sig, witness, log)
        except NotCryptoInductiveException as e:
            LOGGER.warning("Unpacking failed: %s", e.message)
            flags.append(NO_L_EQUIVALENT)
    LOGGER.info("Inverse correspondent of %s: %s", render(mf), render(inductive) if inductive else render(vss))
    return InverseRun(mf, kf, state, pivot_free, vss, inductive, witness, log, flags)
