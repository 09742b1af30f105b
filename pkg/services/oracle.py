"""Finite perfect distributive lattice expansions and brute-force validity checking.

Elements of a model are the up-sets of a finite poset, encoded as bitmasks over
its points. The completely join-irreducibles are the principal up-sets, the
completely meet-irreducibles the complements of principal down-sets.
"""
import itertools
import logging
import random
from dataclasses import dataclass, field
from typing import Final, Iterator, Mapping

import networkx as nx

from core.config import Settings, get_settings
from core.exceptions import (
    PosetTooLargeException,
    SignatureException,
    TooManyValuationsException,
    UnboundVariableException,
)
from .signature import Connective, Origin, Polarity, Signature
from .syntax import (
    Ast,
    App,
    Binder,
    Bot,
    Conominal,
    Exists,
    Forall,
    Inequality,
    Join,
    Kappa,
    Lambda,
    MAnd,
    Meet,
    MetaFormula,
    MImp,
    MNot,
    MOr,
    NegIneq,
    Nominal,
    PropVar,
    Sort,
    Term,
    Top,
    Var,
    expand_restricted,
    free_pure_vars,
    meta_terms,
    prop_vars,
    render,
)

LOGGER: Final = logging.getLogger(__name__)

Element = int
Env = Mapping[Var, Element]


# -- posets ----------------------------------------------------------------------------------------------

def chain_poset(n: int) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from((i, i + 1) for i in range(n - 1))
    return g


def antichain_poset(n: int) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    return g


def random_poset(rng: random.Random, n: int, density: float = 0.4) -> nx.DiGraph:
    """Random order on ``range(n)`` compatible with the natural order, reduced to its covers."""
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from((i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density)
    return nx.transitive_reduction(g) if g.number_of_edges() else g


def _up_sets(poset: nx.DiGraph) -> list[Element]:
    n = poset.number_of_nodes()
    ups = [_mask(nx.descendants(poset, x) | {x}) for x in range(n)]
    result = []
    for a in range(1 << n):
        if all(not (a >> x) & 1 or (a & ups[x]) == ups[x] for x in range(n)):
            result.append(a)
    return sorted(result, key=lambda a: (bin(a).count("1"), a))


def _mask(points) -> Element:
    m = 0
    for x in points:
        m |= 1 << x
    return m


def _points(a: Element) -> list[int]:
    return [x for x in range(a.bit_length()) if (a >> x) & 1]


def show(a: Element) -> str:
    return "{" + ",".join(str(x) for x in _points(a)) + "}"


# -- models ------------------------------------------------------------------------------------------------

@dataclass
class FiniteDLE:
    """Up-set lattice of a poset with normal operators given on irreducible tuples."""

    name: str
    poset: nx.DiGraph
    sig: Signature
    generators: dict[str, dict[tuple[int, ...], Element]]
    elements: list[Element] = field(init=False)
    top: Element = field(init=False)
    join_irreducibles: list[Element] = field(init=False)
    meet_irreducibles: list[Element] = field(init=False)
    _tables: dict[str, dict[tuple[Element, ...], Element]] = field(init=False, default_factory=dict)

    def __post_init__(self):
        n = self.poset.number_of_nodes()
        self.top = (1 << n) - 1
        self.elements = _up_sets(self.poset)
        self.join_irreducibles = [_mask(nx.descendants(self.poset, x) | {x}) for x in range(n)]
        self.meet_irreducibles = [self.top & ~_mask(nx.ancestors(self.poset, x) | {x}) for x in range(n)]
        self._kappa = {j: self.kappa_of(j) for j in self.join_irreducibles}
        self._lambda = {m: self.lambda_of(m) for m in self.meet_irreducibles}

    @property
    def size(self) -> int:
        return len(self.elements)

    @staticmethod
    def leq(a: Element, b: Element) -> bool:
        return a & ~b == 0

    def join_of(self, items) -> Element:
        acc = 0
        for a in items:
            acc |= a
        return acc

    def meet_of(self, items) -> Element:
        acc = self.top
        for a in items:
            acc &= a
        return acc

    def kappa_of(self, a: Element) -> Element:
        """The join of everything above which ``a`` does not lie."""
        return self.join_of(b for b in self.elements if not self.leq(a, b))

    def lambda_of(self, a: Element) -> Element:
        return self.meet_of(b for b in self.elements if not self.leq(b, a))

    def kappa(self, j: Element) -> Element:
        return self._kappa[j] if j in self._kappa else self.kappa_of(j)

    def lambda_(self, m: Element) -> Element:
        return self._lambda[m] if m in self._lambda else self.lambda_of(m)

    # operators

    def _extend(self, c: Connective, args: tuple[Element, ...]) -> Element:
        table = self.generators[c.name]
        choices = []
        for a, e in zip(args, c.order_type):
            inside = (e is Polarity.POSITIVE) == c.is_f
            choices.append([x for x in range(len(self.join_irreducibles)) if ((a >> x) & 1) == inside])
        values = (table[t] for t in itertools.product(*choices))
        return self.join_of(values) if c.is_f else self.meet_of(values)

    def _lattice(self, c: Connective, a: Element, b: Element) -> Element:
        match c.name:
            case "->":
                return self._heyting(a, b)
            case "<-":
                return self._heyting(b, a)
            case "-<":
                return self._difference(a, b)
            case ">-":
                return self._difference(b, a)
        raise SignatureException(f"unknown lattice residual '{c.name}'")

    def _heyting(self, a: Element, b: Element) -> Element:
        return self.join_of(c for c in self.elements if self.leq(c & a, b))

    def _difference(self, a: Element, b: Element) -> Element:
        return self.meet_of(c for c in self.elements if self.leq(a, b | c))

    def _residual(self, c: Connective, args: tuple[Element, ...]) -> Element:
        parent = self.sig.lookup(c.parent)
        k = c.coordinate - 1
        y = args[k]

        def at(x: Element) -> Element:
            return self.apply(parent, args[:k] + (x,) + args[k + 1:])

        positive = parent.order_type[k] is Polarity.POSITIVE
        if parent.is_f:
            xs = [x for x in self.elements if self.leq(at(x), y)]
            return self.join_of(xs) if positive else self.meet_of(xs)
        xs = [x for x in self.elements if self.leq(y, at(x))]
        return self.meet_of(xs) if positive else self.join_of(xs)

    def apply(self, c: Connective, args: tuple[Element, ...]) -> Element:
        cache = self._tables.setdefault(c.name, {})
        if args not in cache:
            if c.origin is Origin.LATTICE:
                cache[args] = self._lattice(c, *args)
            elif c.origin is Origin.RESIDUAL:
                cache[args] = self._residual(c, args)
            else:
                cache[args] = self._extend(c, args)
        return cache[args]

    def describe(self) -> str:
        return f"{self.name} ({self.size} elements, {len(self.join_irreducibles)} join-irreducibles)"


def build_dle(sig: Signature, poset: nx.DiGraph, seed: int | str = 0, name: str = "model",
              settings: Settings | None = None) -> FiniteDLE:
    """Random normal operators over the up-set lattice of ``poset``, determined by ``seed``."""
    settings = settings or get_settings()
    n = poset.number_of_nodes()
    if n > settings.max_poset_size:
        raise PosetTooLargeException(n, settings.max_poset_size)
    rng = random.Random(f"{seed}:{name}")
    elements = _up_sets(poset)
    generators = {}
    for c in sig.base:
        generators[c.name] = {t: rng.choice(elements) for t in itertools.product(range(n), repeat=c.arity)}
    model = FiniteDLE(name, poset, sig, generators)
    LOGGER.debug("Built %s", model.describe())
    return model


# -- batteries ------------------------------------------------------------------------------------------

@dataclass
class Battery:
    models: list[FiniteDLE]

    def __iter__(self) -> Iterator[FiniteDLE]:
        return iter(self.models)

    def __len__(self) -> int:
        return len(self.models)

    def names(self) -> list[str]:
        return [m.name for m in self.models]


def build_battery(sig: Signature, settings: Settings | None = None, seed: int | None = None) -> Battery:
    """Chains, the diamond, the cube and a run of seeded random models."""
    settings = settings or get_settings()
    seed = settings.battery_seed if seed is None else seed
    shapes = [("chain2", chain_poset(1)), ("chain3", chain_poset(2)), ("chain4", chain_poset(3)),
              ("diamond", antichain_poset(2)), ("cube", antichain_poset(3))]
    models = [build_dle(sig, poset, seed, name, settings) for name, poset in shapes]
    rng = random.Random(seed)
    for k in range(settings.battery_random_models):
        poset = random_poset(rng, rng.randint(2, 4))
        models.append(build_dle(sig, poset, seed, f"seed{k}", settings))
    LOGGER.info("Battery of %d models for seed %s", len(models), seed)
    return Battery(models)


# -- evaluation -------------------------------------------------------------------------------------------

def evaluate(model: FiniteDLE, env: Env, t: Term) -> Element:
    match t:
        case PropVar() | Nominal() | Conominal():
            if t not in env:
                raise UnboundVariableException(render(t))
            return env[t]
        case Top():
            return model.top
        case Bot():
            return 0
        case Meet(a, b):
            return evaluate(model, env, a) & evaluate(model, env, b)
        case Join(a, b):
            return evaluate(model, env, a) | evaluate(model, env, b)
        case Kappa(a):
            return model.kappa(evaluate(model, env, a))
        case Lambda(a):
            return model.lambda_(evaluate(model, env, a))
        case App(op, args):
            return model.apply(op, tuple(evaluate(model, env, a) for a in args))
    raise TypeError(t)


def _guard(model: FiniteDLE, count: int, settings: Settings) -> None:
    total = model.size ** count
    if total > settings.max_valuations:
        raise TooManyValuationsException(total, settings.max_valuations)


def valuations(model: FiniteDLE, names: list[str], settings: Settings | None = None) -> Iterator[dict[Var, Element]]:
    _guard(model, len(names), settings or get_settings())
    for values in itertools.product(model.elements, repeat=len(names)):
        yield {PropVar(n): v for n, v in zip(names, values)}


def counterexample(model: FiniteDLE, ineq: Inequality, settings: Settings | None = None) -> dict[str, str] | None:
    """First valuation refuting ``ineq``, rendered for reports."""
    for env in valuations(model, prop_vars(ineq), settings):
        if not model.leq(evaluate(model, env, ineq.lhs), evaluate(model, env, ineq.rhs)):
            return {v.name: show(a) for v, a in env.items()}
    return None


def valid_inequality(model: FiniteDLE, ineq: Inequality, settings: Settings | None = None) -> bool:
    if free_pure_vars(ineq):
        return valid_meta(model, ineq, settings=settings)
    return counterexample(model, ineq, settings) is None


def _domain(model: FiniteDLE, b: Binder) -> list[Element]:
    return model.join_irreducibles if b.sort is Sort.NOM else model.meet_irreducibles


def _holds(model: FiniteDLE, env: dict[Var, Element], mf: MetaFormula) -> bool:
    match mf:
        case Inequality(l, r):
            return model.leq(evaluate(model, env, l), evaluate(model, env, r))
        case NegIneq(l, r):
            return not model.leq(evaluate(model, env, l), evaluate(model, env, r))
        case MAnd(items):
            return all(_holds(model, env, x) for x in items)
        case MOr(items):
            return any(_holds(model, env, x) for x in items)
        case MNot(b):
            return not _holds(model, env, b)
        case MImp(a, c):
            return not _holds(model, env, a) or _holds(model, env, c)
        case Forall(b, body):
            return all(_holds(model, {**env, b.var: v}, body) for v in _domain(model, b))
        case Exists(b, body):
            return any(_holds(model, {**env, b.var: v}, body) for v in _domain(model, b))
    raise TypeError(mf)


def _closure(mf: MetaFormula) -> MetaFormula:
    for v in sorted(free_pure_vars(mf), key=lambda v: (isinstance(v, Conominal), v.name), reverse=True):
        mf = Forall(Binder(v.name, Sort.NOM if isinstance(v, Nominal) else Sort.CONOM), mf)
    return mf


def valid_meta(model: FiniteDLE, mf: MetaFormula, env: Env | None = None, settings: Settings | None = None) -> bool:
    """Universal closure over free pure variables and every proposition variable valuation."""
    body = expand_restricted(_closure(mf) if env is None else mf)
    names = list(dict.fromkeys(n for t in meta_terms(body) for n in prop_vars(t) if PropVar(n) not in (env or {})))
    for props in valuations(model, names, settings):
        if not _holds(model, {**(env or {}), **props}, body):
            return False
    return True


def holds(model: FiniteDLE, ast: Ast, settings: Settings | None = None) -> bool:
    if isinstance(ast, Inequality):
        return valid_inequality(model, ast, settings)
    return valid_meta(model, ast, settings=settings)


def verdicts(battery: Battery, ast: Ast, settings: Settings | None = None) -> dict[str, bool]:
    return {m.name: holds(m, ast, settings) for m in battery}


def separating_models(battery: Battery, a: Ast, b: Ast, settings: Settings | None = None) -> list[str]:
    return [m.name for m in battery if holds(m, a, settings) != holds(m, b, settings)]


def equivalent(battery: Battery, a: Ast, b: Ast, settings: Settings | None = None) -> bool:
    """Validity agrees on every model of the battery."""
    return not separating_models(battery, a, b, settings)


# -- dump format ------------------------------------------------------------------------------------------

def dump_model(model: FiniteDLE) -> str:
    """``model``/``points``/``cover`` headers, then one ``op`` line per irreducible tuple."""
    lines = [f"model {model.name}", f"points {model.poset.number_of_nodes()}"]
    lines += [f"cover {x} {y}" for x, y in sorted(model.poset.edges)]
    for name, table in model.generators.items():
        for t, value in sorted(table.items()):
            pts = " ".join(str(x) for x in _points(value)) or "-"
            lines.append(f"op {name} {' '.join(str(x) for x in t)} : {pts}".replace("  ", " "))
    return "\n".join(lines) + "\n"


def load_model(text: str, sig: Signature, settings: Settings | None = None) -> FiniteDLE:
    settings = settings or get_settings()
    name, n = "model", None
    covers: list[tuple[int, int]] = []
    generators: dict[str, dict[tuple[int, ...], Element]] = {}
    try:
        for line in text.splitlines():
            head, _, rest = line.strip().partition(" ")
            if not head or head.startswith("#"):
                continue
            if head == "model":
                name = rest.strip()
            elif head == "points":
                n = int(rest)
            elif head == "cover":
                x, y = rest.split()
                covers.append((int(x), int(y)))
            elif head == "op":
                left, _, right = rest.partition(":")
                op, *coords = left.split()
                pts = [] if right.strip() in ("", "-") else [int(x) for x in right.split()]
                generators.setdefault(op, {})[tuple(int(x) for x in coords)] = _mask(pts)
            else:
                raise SignatureException(f"unknown model line '{line.strip()}'")
    except ValueError as e:
        raise SignatureException(f"malformed model dump: {e}")
    if n is None:
        raise SignatureException("model dump has no 'points' line")
    if n > settings.max_poset_size:
        raise PosetTooLargeException(n, settings.max_poset_size)
    poset = antichain_poset(n)
    poset.add_edges_from(covers)
    if not nx.is_directed_acyclic_graph(poset):
        raise SignatureException("cover relation has a cycle")
    elements = set(_up_sets(poset))
    for c in sig.base:
        table = generators.get(c.name, {})
        expected = set(itertools.product(range(n), repeat=c.arity))
        if set(table) != expected:
            raise SignatureException(f"operator '{c.name}' is not given on every irreducible tuple")
        if any(v not in elements for v in table.values()):
            raise SignatureException(f"operator '{c.name}' takes a value that is not an up-set")
    return FiniteDLE(name, poset, sig, {c.name: generators[c.name] for c in sig.base})
