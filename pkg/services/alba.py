"""Forward correspondence for inductive inequalities.

A run preprocesses the input into definite pieces, approximates every skeleton
hole with a fresh nominal or conominal, solves each critical PIA part for its
variable through the LA/RA adjoints and then eliminates the proposition variables
in Omega order by the right- and left-handed Ackermann rules.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Final, Iterable, final

from core.exceptions import (
    InternalShapeException,
    NotDefiniteInductiveException,
    NotInAckermannShapeException,
    NotInductiveException,
    NotPIAException,
    RuleNotApplicableException,
)
from .classifier import (
    Decomposition,
    HoleKind,
    InductiveWitness,
    Side,
    classify_tree,
    decompose,
    find_witnesses,
    is_critical,
    uniform_variables,
)
from .signature import IMP, RIGHT_SUB, Origin, Polarity, Signature
from .syntax import (
    BOT,
    TOP,
    App,
    Binder,
    Bot,
    Conominal,
    FreshNames,
    Inequality,
    Join,
    Meet,
    MetaFormula,
    MImp,
    Nominal,
    PropVar,
    PureVar,
    Sign,
    Sort,
    Term,
    Top,
    all_names,
    child_sign,
    children,
    forall_all,
    join_all,
    meet_all,
    meta_and,
    meta_terms,
    polarity_of_occurrences,
    prop_vars,
    pure_vars,
    rebuild,
    render,
    replace_at,
    sign_at,
    signed_positions,
    sort_of,
    subterm,
    substitute,
)
from .trace import Trace

LOGGER: Final = logging.getLogger(__name__)

HOLE_PREFIX: Final = {HoleKind.ALPHA: "j", HoleKind.BETA: "m", HoleKind.GAMMA: "i", HoleKind.DELTA: "n"}

NON_DEFINITE: Final = "non-definite"
NON_CANONICAL: Final = "non-canonical-shape"


class Mode(str, Enum):
    """LA solves u <= phi for the leaf, RA solves phi <= u."""
    LA = "LA"
    RA = "RA"


@final
@dataclass(frozen=True)
class QuasiInequality:
    antecedent: tuple[Inequality, ...]
    consequent: Inequality
    binders: tuple[Binder, ...] = ()

    def to_meta(self) -> MetaFormula:
        body: MetaFormula = self.consequent
        if self.antecedent:
            body = MImp(meta_and(self.antecedent), self.consequent)
        return forall_all(self.binders, body)


@final
@dataclass(frozen=True)
class Solution:
    """``bound <= var`` when ``lower``, otherwise ``var <= bound``; plus split-off side conditions."""

    var: str
    bound: Term
    lower: bool
    side: tuple[Inequality, ...] = ()

    def inequality(self) -> Inequality:
        if self.lower:
            return Inequality(self.bound, PropVar(self.var))
        return Inequality(PropVar(self.var), self.bound)


@final
@dataclass(frozen=True)
class MinimalValuation:
    var: str
    polarity: Polarity
    candidates: tuple[Term, ...]

    @property
    def aggregate(self) -> Term:
        if self.polarity is Polarity.POSITIVE:
            return join_all(self.candidates)
        return meet_all(self.candidates)


@final
@dataclass(frozen=True)
class Reduction:
    """One preprocessed piece carried through approximation and elimination."""

    item: Inequality
    decomposition: Decomposition
    hole_vars: dict[str, PureVar] = field(compare=False)
    system: QuasiInequality
    approximated: QuasiInequality
    quasi: QuasiInequality
    valuations: dict[str, MinimalValuation] = field(compare=False)
    output: MetaFormula
    flags: tuple[str, ...] = ()


@dataclass
class AlbaRun:
    input: Inequality
    witness: InductiveWitness
    preprocessed: list[Inequality]
    reductions: list[Reduction]
    trace: Trace
    flags: list[str] = field(default_factory=list)

    @property
    def systems(self) -> list[QuasiInequality]:
        return [r.system for r in self.reductions]

    @property
    def quasi(self) -> list[QuasiInequality]:
        return [r.quasi for r in self.reductions]

    @property
    def output(self) -> MetaFormula:
        return meta_and(r.output for r in self.reductions)


# -- constants -------------------------------------------------------------------------------

def simplify_constants(t: Term) -> Term:
    """Lattice identities for top/bottom and normality of the operators."""
    kids = tuple(simplify_constants(c) for c in children(t))
    t = rebuild(t, kids) if kids else t
    match t:
        case Meet(Top(), x) | Meet(x, Top()):
            return x
        case Meet(Bot(), _) | Meet(_, Bot()):
            return BOT
        case Join(Bot(), x) | Join(x, Bot()):
            return x
        case Join(Top(), _) | Join(_, Top()):
            return TOP
        case App(op, args) if args:
            for i, a in enumerate(args):
                positive = op.polarity(i) is Polarity.POSITIVE
                if op.is_f and ((positive and a == BOT) or (not positive and a == TOP)):
                    return BOT
                if op.is_g and ((positive and a == TOP) or (not positive and a == BOT)):
                    return TOP
    return t


def _simplify(ineq: Inequality) -> Inequality:
    return Inequality(simplify_constants(ineq.lhs), simplify_constants(ineq.rhs))


# -- preprocessing ------------------------------------------------------------------------------

def _critical_below(t: Term, sign: Sign, eps: dict[str, Polarity]) -> bool:
    st = classify_tree(t, sign)
    return any(is_critical(n, eps) for n in st.leaves())


def _distribute(t: Term, k: int, into_meet: bool) -> Term:
    kids = list(children(t))
    a, b = children(kids[k])
    left = rebuild(t, tuple(kids[:k] + [a] + kids[k + 1:]))
    right = rebuild(t, tuple(kids[:k] + [b] + kids[k + 1:]))
    return Meet(left, right) if into_meet else Join(left, right)


def _slr(t: Term, sign: Sign) -> bool:
    plus = sign is Sign.PLUS
    match t:
        case Meet():
            return plus
        case Join():
            return not plus
        case App(op, args) if args:
            return op.is_f == plus
    return False


def _pia_mover(t: Term, sign: Sign) -> bool:
    plus = sign is Sign.PLUS
    match t:
        case Join():
            return plus
        case Meet():
            return not plus
        case App(op, args) if args:
            return op.is_g == plus
    return False


def _distribution_redex(t: Term, root: Sign, eps: dict[str, Polarity]) -> tuple[tuple[int, ...], str] | None:
    """Leftmost-outermost distribution redex: (path, rule)."""
    def walk(s: Term, sign: Sign, path: tuple[int, ...], skeleton: bool):
        node_roles_skeleton = skeleton and _skeleton_capable(s, sign)
        for k, c in enumerate(children(s)):
            cs = child_sign(sign, s, k)
            if not _critical_below(c, cs, eps):
                continue
            join_up = (isinstance(c, Join) and cs is Sign.PLUS) or (isinstance(c, Meet) and cs is Sign.MINUS)
            meet_up = (isinstance(c, Meet) and cs is Sign.PLUS) or (isinstance(c, Join) and cs is Sign.MINUS)
            if node_roles_skeleton and _slr(s, sign) and join_up:
                return path + (k,), "distribution"
            if not node_roles_skeleton and _pia_mover(s, sign) and meet_up:
                return path + (k,), "pia-distribution"
        for k, c in enumerate(children(s)):
            hit = walk(c, child_sign(sign, s, k), path + (k,), node_roles_skeleton)
            if hit:
                return hit
        return None

    return walk(t, root, (), True)


def _skeleton_capable(t: Term, sign: Sign) -> bool:
    return isinstance(t, (Meet, Join)) or _slr(t, sign)


def _apply_distribution(t: Term, child_path: tuple[int, ...], root: Sign) -> Term:
    # PIA movers lift meets at + (joins at -); SLR nodes lift joins at + (meets at -)
    path, k = child_path[:-1], child_path[-1]
    node = subterm(t, path)
    plus = sign_at(t, root, path) is Sign.PLUS
    into_meet = plus if _pia_mover(node, Sign.PLUS if plus else Sign.MINUS) else not plus
    return replace_at(t, path, _distribute(node, k, into_meet))


def _split(ineq: Inequality) -> list[Inequality] | None:
    if isinstance(ineq.lhs, Join):
        return [Inequality(ineq.lhs.left, ineq.rhs), Inequality(ineq.lhs.right, ineq.rhs)]
    if isinstance(ineq.rhs, Meet):
        return [Inequality(ineq.lhs, ineq.rhs.left), Inequality(ineq.lhs, ineq.rhs.right)]
    return None


def _eliminate_uniform(ineq: Inequality) -> tuple[Inequality, dict[str, Term]] | None:
    uniform = uniform_variables(ineq)
    if not uniform:
        return None
    bindings = {PropVar(v): (TOP if s is Sign.PLUS else BOT) for v, s in uniform.items()}
    return _simplify(Inequality(substitute(ineq.lhs, bindings), substitute(ineq.rhs, bindings))), bindings


def preprocess(ineq: Inequality, witness: InductiveWitness | None = None, trace: Trace | None = None) -> list[Inequality]:
    """Distribute skeleton joins upward and PIA meets upward, split, and drop uniform variables."""
    trace = trace if trace is not None else Trace(enabled=False)
    eps = dict(witness.epsilon) if witness else {}
    pending = [_simplify(ineq)]
    done: list[Inequality] = []
    while pending:
        item = pending.pop(0)
        parts = _split(item)
        if parts is not None:
            trace.record("preprocess", "splitting", item, parts)
            pending[:0] = parts
            continue
        rewritten = None
        for side, root in (("lhs", Sign.PLUS), ("rhs", Sign.MINUS)):
            term = getattr(item, side)
            hit = _distribution_redex(term, root, eps)
            if hit is None:
                continue
            path, rule = hit
            new_term = _apply_distribution(term, path, root)
            rewritten = Inequality(new_term, item.rhs) if side == "lhs" else Inequality(item.lhs, new_term)
            trace.record("preprocess", rule, item, rewritten)
            break
        if rewritten is not None:
            pending.insert(0, rewritten)
            continue
        eliminated = _eliminate_uniform(item)
        if eliminated is not None:
            new, bindings = eliminated
            trace.record("preprocess", "uniform-elimination", item, new,
                         ", ".join(f"{v.name}:={render(t)}" for v, t in bindings.items()))
            pending.insert(0, new)
            continue
        done.append(item)
    LOGGER.debug("Preprocessing produced %d inequalit(ies)", len(done))
    return done


# -- single rules ----------------------------------------------------------------------------------

def first_approximation(ineq: Inequality, fresh: FreshNames | None = None) -> QuasiInequality:
    fresh = fresh or FreshNames(all_names(ineq))
    j, m = fresh.nominal("j"), fresh.conominal("m")
    return QuasiInequality(
        (Inequality(j, ineq.lhs), Inequality(ineq.rhs, m)),
        Inequality(j, m),
        (Binder(j.name, Sort.NOM), Binder(m.name, Sort.CONOM)),
    )


def _is_lattice(op, name: str) -> bool:
    return op.origin is Origin.LATTICE and op.name == name


def _with(args: tuple[Term, ...], k: int, value: Term) -> tuple[Term, ...]:
    return args[:k] + (value,) + args[k + 1:]


def _step(t: Term, k: int, u: Term, mode: Mode, sig: Signature) -> tuple[Term, Term, Mode, list[Inequality]]:
    """Move one node from ``t`` onto the ``u`` side, keeping coordinate ``k`` displayed."""
    kids = children(t)
    child = kids[k]
    if mode is Mode.LA:
        match t:
            case Meet():
                return child, u, Mode.LA, [Inequality(u, kids[1 - k])]
            case Join():
                return child, App(RIGHT_SUB, (u, kids[1 - k])), Mode.LA, []
            case App(op, args) if args and op.is_g:
                if _is_lattice(op, "->"):
                    a, b = args
                    return (b, Meet(u, a), Mode.LA, []) if k == 1 else (a, App(IMP, (u, b)), Mode.RA, [])
                if _is_lattice(op, "<-"):
                    a, b = args
                    return (a, Meet(u, b), Mode.LA, []) if k == 0 else (b, App(IMP, (u, a)), Mode.RA, [])
                res = App(sig.residual_of(op, k + 1), _with(args, k, u))
                return child, res, Mode.LA if op.polarity(k) is Polarity.POSITIVE else Mode.RA, []
    else:
        match t:
            case Join():
                return child, u, Mode.RA, [Inequality(kids[1 - k], u)]
            case Meet():
                return child, App(IMP, (kids[1 - k], u)), Mode.RA, []
            case App(op, args) if args and op.is_f:
                if _is_lattice(op, "-<"):
                    a, b = args
                    return (a, Join(b, u), Mode.RA, []) if k == 0 else (b, App(RIGHT_SUB, (a, u)), Mode.LA, [])
                if _is_lattice(op, ">-"):
                    a, b = args
                    return (b, Join(a, u), Mode.RA, []) if k == 1 else (a, App(RIGHT_SUB, (b, u)), Mode.LA, [])
                res = App(sig.residual_of(op, k + 1), _with(args, k, u))
                return child, res, Mode.RA if op.polarity(k) is Polarity.POSITIVE else Mode.LA, []
    raise NotPIAException(render(t))


def _shown(t: Term, u: Term, mode: Mode) -> Inequality:
    return Inequality(u, t) if mode is Mode.LA else Inequality(t, u)


def _rule_name(t: Term, mode: Mode) -> str:
    if (isinstance(t, Meet) and mode is Mode.LA) or (isinstance(t, Join) and mode is Mode.RA):
        return "splitting"
    if isinstance(t, App) and t.op.arity == 1:
        return "adjunction"
    return "residuation"


def la_ra(phi: Term, leaf: tuple[int, ...], mode: Mode, sig: Signature,
          u: Term | None = None, trace: Trace | None = None) -> Solution:
    """Solve ``u <= phi`` (LA) or ``phi <= u`` (RA) for the variable at ``leaf``."""
    if u is None:
        u = Nominal("u") if mode is Mode.LA else Conominal("u")
    node = phi
    side: list[Inequality] = []
    for k in leaf:
        before = _shown(node, u, mode)
        rule = _rule_name(node, mode)
        node, u, mode, extra = _step(node, k, u, mode, sig)
        side.extend(extra)
        if trace is not None:
            trace.record("reduction", rule, before, [_shown(node, u, mode), *extra])
    if not isinstance(node, PropVar):
        raise NotPIAException(render(phi))
    return Solution(node.name, u, lower=mode is Mode.LA, side=tuple(side))


def _first_var_coordinate(t: Term) -> int:
    for k, c in enumerate(children(t)):
        if prop_vars(c):
            return k
    return 0


def apply_residuation(ineq: Inequality, sig: Signature, coordinate: int | None = None) -> Inequality:
    """One residuation/adjunction step on the outermost connective."""
    lhs, rhs = ineq.lhs, ineq.rhs
    if isinstance(lhs, Meet) or (isinstance(lhs, App) and lhs.args and lhs.op.is_f):
        k = _first_var_coordinate(lhs) if coordinate is None else coordinate
        node, u, mode, _ = _step(lhs, k, rhs, Mode.RA, sig)
    elif isinstance(rhs, Join) or (isinstance(rhs, App) and rhs.args and rhs.op.is_g):
        k = _first_var_coordinate(rhs) if coordinate is None else coordinate
        node, u, mode, _ = _step(rhs, k, lhs, Mode.LA, sig)
    else:
        raise RuleNotApplicableException("residuation", render(ineq))
    return _shown(node, u, mode)


def apply_approximation(ineq: Inequality, coordinate: int | None = None,
                        fresh: FreshNames | None = None) -> tuple[Inequality, Inequality]:
    """Approximate a nominal below an f-term or a conominal above a g-term in one coordinate."""
    fresh = fresh or FreshNames(all_names(ineq))
    lhs, rhs = ineq.lhs, ineq.rhs
    if sort_of(lhs) is Sort.NOM and isinstance(rhs, App) and rhs.args and rhs.op.is_f:
        target, lower_side = rhs, True
    elif sort_of(rhs) is Sort.CONOM and isinstance(lhs, App) and lhs.args and lhs.op.is_g:
        target, lower_side = lhs, False
    else:
        raise RuleNotApplicableException("approximation", render(ineq))
    k = _first_var_coordinate(target) if coordinate is None else coordinate
    arg = target.args[k]
    positive = target.op.polarity(k) is Polarity.POSITIVE
    # f-positive and g-antitone coordinates take a nominal
    if positive == lower_side:
        v = fresh.nominal("j")
        side = Inequality(v, arg)
    else:
        v = fresh.conominal("m")
        side = Inequality(arg, v)
    approximated = App(target.op, _with(target.args, k, v))
    main = Inequality(lhs, approximated) if lower_side else Inequality(approximated, rhs)
    return main, side


# -- Ackermann ----------------------------------------------------------------------------------------

def _signs(t: Term, var: str) -> set[Sign]:
    return set(polarity_of_occurrences(Sign.PLUS, t, var))


def _ackermann(system: QuasiInequality, var: str, polarity: Polarity | None,
               trace: Trace | None) -> tuple[QuasiInequality, tuple[Term, ...]]:
    p = PropVar(var)
    lower = [a for a in system.antecedent if a.rhs == p and var not in prop_vars(a.lhs)]
    upper = [a for a in system.antecedent if a.lhs == p and var not in prop_vars(a.rhs)]
    if polarity is None:
        polarity = Polarity.NEGATIVE if upper and not lower else Polarity.POSITIVE
    right_handed = polarity is Polarity.POSITIVE
    chosen = lower if right_handed else upper
    candidates = tuple(a.lhs if right_handed else a.rhs for a in chosen)
    rest = [a for a in system.antecedent if a not in chosen]
    # consequent occurrences take the opposite polarity
    for a, in_consequent in [*((a, False) for a in rest), (system.consequent, True)]:
        minus_left = in_consequent == right_handed
        lhs_ok = _signs(a.lhs, var) <= ({Sign.MINUS} if minus_left else {Sign.PLUS})
        rhs_ok = _signs(a.rhs, var) <= ({Sign.PLUS} if minus_left else {Sign.MINUS})
        if not (lhs_ok and rhs_ok):
            raise NotInAckermannShapeException(var, render(a))
    value = join_all(candidates) if right_handed else meet_all(candidates)
    binding = {p: value}
    new = QuasiInequality(
        tuple(_simplify(Inequality(substitute(a.lhs, binding), substitute(a.rhs, binding))) for a in rest),
        _simplify(Inequality(substitute(system.consequent.lhs, binding), substitute(system.consequent.rhs, binding))),
        system.binders,
    )
    if trace is not None:
        trace.record("ackermann", "RAR" if right_handed else "LAR", list(system.antecedent), list(new.antecedent),
                     f"{var} := {render(value)}")
    return new, candidates


def ackermann_eliminate(system: QuasiInequality, var: str, polarity: Polarity | None = None,
                        trace: Trace | None = None) -> QuasiInequality:
    """Eliminate ``var`` by the right-handed (polarity 1) or left-handed (polarity d) Ackermann rule."""
    return _ackermann(system, var, polarity, trace)[0]


# -- full reduction -------------------------------------------------------------------------------------

def _chain(t: Term, kind: type, names: set[str]) -> bool:
    if isinstance(t, kind):
        return _chain(t.left, kind, names) and _chain(t.right, kind, names)
    return isinstance(t, PropVar) and t.name in names


def _ordered_pure(terms: Iterable[Term]) -> list[PureVar]:
    seen: dict[PureVar, None] = {}
    for t in terms:
        for v in pure_vars(t):
            seen.setdefault(v)
    return list(seen)


def _binders(vs: Iterable[PureVar]) -> tuple[Binder, ...]:
    return tuple(Binder(v.name, Sort.NOM if isinstance(v, Nominal) else Sort.CONOM) for v in vs)


def _terms(ineqs: Iterable[Inequality]) -> list[Term]:
    return [t for a in ineqs for t in (a.lhs, a.rhs)]


def _shape_flags(d: Decomposition) -> list[str]:
    flags = []
    if not d.witness.definite:
        flags.append(NON_DEFINITE)
    for h in d.of_kind(HoleKind.ALPHA, HoleKind.BETA):
        srr = any((isinstance(s, Join) and sg is Sign.PLUS) or (isinstance(s, Meet) and sg is Sign.MINUS)
                  for _, s, sg in signed_positions(h.term, h.sign))
        if srr:
            flags.append(NON_CANONICAL)
            break
    return flags


def reduce_item(item: Inequality, witness: InductiveWitness, sig: Signature, fresh: FreshNames,
                trace: Trace | None = None, share: bool = True) -> Reduction:
    """Approximate, solve and eliminate one preprocessed inequality.

    With ``share`` a left-hand side that is a meet of critical holes gets a single
    nominal, and dually for a join of critical holes on the right.
    """
    d = decompose(item, witness)
    alpha = {h.name for h in d.of_kind(HoleKind.ALPHA) if h.side is Side.LEFT}
    beta = {h.name for h in d.of_kind(HoleKind.BETA) if h.side is Side.RIGHT}
    shared_lhs = share and _chain(d.skeleton.lhs, Meet, alpha)
    shared_rhs = share and _chain(d.skeleton.rhs, Join, beta)
    initial = first_approximation(item, fresh)
    j0 = initial.consequent.lhs if shared_lhs else None
    m0 = initial.consequent.rhs if shared_rhs else None

    hole_vars: dict[str, PureVar] = {}
    for h in d.holes:
        if shared_lhs and h.name in alpha:
            hole_vars[h.name] = j0
        elif shared_rhs and h.name in beta:
            hole_vars[h.name] = m0
        else:
            hole_vars[h.name] = fresh.of_sort(h.kind.sort, HOLE_PREFIX[h.kind])
    bindings = {PropVar(name): v for name, v in hole_vars.items()}
    consequent = Inequality(
        j0 if shared_lhs else substitute(d.skeleton.lhs, bindings),
        m0 if shared_rhs else substitute(d.skeleton.rhs, bindings),
    )
    if trace is not None:
        trace.record("approximation", "first-approximation", item, consequent)

    antecedent: list[Inequality] = []
    gamma_delta: dict[PureVar, Inequality] = {}
    for h in d.holes:
        v = hole_vars[h.name]
        if h.kind is HoleKind.GAMMA:
            a = Inequality(v, h.term)
        elif h.kind is HoleKind.DELTA:
            a = Inequality(h.term, v)
        else:
            a = Inequality(v, h.term) if h.kind is HoleKind.ALPHA else Inequality(h.term, v)
            if trace is not None:
                trace.record("approximation", "approximation", h.term, a)
            sol = la_ra(h.term, h.leaf or (), Mode.LA if h.kind is HoleKind.ALPHA else Mode.RA, sig, v, trace)
            antecedent.append(sol.inequality())
            antecedent.extend(sol.side)
            continue
        if trace is not None:
            trace.record("approximation", "approximation", h.term, a)
        gamma_delta[v] = a
        antecedent.append(a)

    approximated = system = QuasiInequality(tuple(antecedent), consequent)
    valuations: dict[str, MinimalValuation] = {}
    for var in witness.elimination_order(prop_vars(item)):
        pol = witness.polarity(var)
        system, candidates = _ackermann(system, var, pol, trace)
        valuations[var] = MinimalValuation(var, pol, candidates)

    leftover = [t for t in _terms([*system.antecedent, system.consequent]) if prop_vars(t)]
    if leftover:
        raise InternalShapeException(f"proposition variables left after elimination: {render(leftover[0])}")
    all_terms = [system.consequent.lhs, system.consequent.rhs, *_terms(system.antecedent)]
    quasi = QuasiInequality(system.antecedent, system.consequent, _binders(_ordered_pure(all_terms)))

    output = _reverse_approximation(quasi, set(gamma_delta), trace)
    return Reduction(item, d, hole_vars, initial, approximated, quasi, valuations, output, tuple(_shape_flags(d)))


def _reverse_approximation(quasi: QuasiInequality, restricting: set[PureVar], trace: Trace | None) -> MetaFormula:
    """Fold ``i <= gamma`` and ``delta <= n`` back into the consequent."""
    remaining = list(quasi.antecedent)
    consequent = quasi.consequent
    for a in quasi.antecedent:
        v = a.lhs if a.lhs in restricting else a.rhs if a.rhs in restricting else None
        if v is None:
            continue
        value = a.rhs if v == a.lhs else a.lhs
        others = [b for b in remaining if b != a]
        if any(v in pure_vars(t) for t in _terms(others)) or v in pure_vars(value):
            continue
        consequent = Inequality(substitute(consequent.lhs, {v: value}), substitute(consequent.rhs, {v: value}))
        remaining = others
    body_terms = [consequent.lhs, consequent.rhs, *_terms(remaining)]
    result = QuasiInequality(tuple(remaining), consequent, _binders(_ordered_pure(body_terms))).to_meta()
    if trace is not None:
        trace.record("output", "reverse-approximation", quasi.to_meta(), result)
    return result


def _item_witness(item: Inequality, original: InductiveWitness) -> InductiveWitness:
    witnesses = find_witnesses(item)
    if not witnesses:
        raise NotInductiveException(f"Preprocessed piece is not inductive: {render(item)}")
    for w in witnesses:
        if all(w.polarity(v) is original.polarity(v) for v in w.epsilon):
            return w
    return witnesses[0]


def minimal_valuations(ineq: Inequality, witness: InductiveWitness, sig: Signature) -> dict[str, MinimalValuation]:
    if not witness.definite:
        raise NotDefiniteInductiveException(f"Not definite under {witness.describe()}: {render(ineq)}")
    fresh = FreshNames(all_names(ineq))
    return reduce_item(ineq, witness, sig, fresh).valuations


def run_alba(ineq: Inequality, sig: Signature, witness: InductiveWitness | None = None,
             share: bool = True, trace: bool = True) -> AlbaRun:
    if witness is None:
        witnesses = find_witnesses(ineq)
        if not witnesses:
            raise NotInductiveException(f"ALBA fails: {render(ineq)} is not inductive")
        witness = witnesses[0]
    LOGGER.info("Running ALBA on %s with %s", render(ineq), witness.describe())
    log = Trace(enabled=trace)
    items = preprocess(ineq, witness, log)
    fresh = FreshNames(all_names(ineq))
    for item in items:
        fresh.reserve(all_names(item))
    reductions = [reduce_item(item, _item_witness(item, witness), sig, fresh, log, share) for item in items]
    run = AlbaRun(ineq, witness, items, reductions, log,
                  sorted({f for r in reductions for f in r.flags}))
    if any(prop_vars(t) for t in meta_terms(run.output)):
        raise InternalShapeException(f"impure output {render(run.output)}")
    return run


