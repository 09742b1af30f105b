"""Signed generation trees, inductive/Sahlqvist detection and crypto-inductive checks."""
import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Final, Iterable, final

import networkx as nx
from pydantic import BaseModel, ConfigDict

from core.exceptions import NotLInequalityException
from .signature import Origin, Polarity, Signature
from .syntax import (
    App,
    Inequality,
    Join,
    Kappa,
    Lambda,
    Meet,
    PropVar,
    Path,
    Sign,
    Sort,
    Term,
    FreshNames,
    children,
    child_sign,
    positions,
    prop_vars,
    pure_vars,
    render,
    replace_at,
    subterm,
)

LOGGER: Final = logging.getLogger(__name__)


class Role(str, Enum):
    DELTA_ADJOINT = "delta-adjoint"
    SLR = "SLR"
    SRA = "SRA"
    SRR = "SRR"
    LEAF = "leaf"
    CONSTANT = "constant"


SKELETON_ROLES: Final = frozenset({Role.DELTA_ADJOINT, Role.SLR})
PIA_ROLES: Final = frozenset({Role.SRA, Role.SRR})


def node_roles(t: Term, sign: Sign) -> frozenset[Role]:
    """Skeleton and PIA roles of a signed node.

    +meet and -join are delta-adjoints and SLR in the skeleton, SRA in PIA parts;
    +join and -meet are delta-adjoints in the skeleton, SRR in PIA parts.
    """
    plus = sign is Sign.PLUS
    match t:
        case PropVar():
            return frozenset({Role.LEAF})
        case Meet():
            return frozenset({Role.DELTA_ADJOINT, Role.SLR, Role.SRA} if plus else {Role.DELTA_ADJOINT, Role.SRR})
        case Join():
            return frozenset({Role.DELTA_ADJOINT, Role.SRR} if plus else {Role.DELTA_ADJOINT, Role.SLR, Role.SRA})
        case App(op, args) if args:
            if op.is_f == plus:
                return frozenset({Role.SLR})
            return frozenset({Role.SRA} if op.arity == 1 else {Role.SRR})
    return frozenset({Role.CONSTANT})


@final
@dataclass(frozen=True)
class SignedNode:
    path: Path
    term: Term
    sign: Sign
    roles: frozenset[Role]

    @property
    def is_leaf(self) -> bool:
        return Role.LEAF in self.roles

    @property
    def skeleton_capable(self) -> bool:
        return bool(self.roles & SKELETON_ROLES)

    @property
    def pia_capable(self) -> bool:
        return bool(self.roles & PIA_ROLES)

    @property
    def pia_only(self) -> bool:
        return self.pia_capable and not self.skeleton_capable

    @property
    def var(self) -> str:
        assert isinstance(self.term, PropVar)
        return self.term.name


@final
@dataclass(frozen=True)
class SignedTree:
    term: Term
    root_sign: Sign
    nodes: dict[Path, SignedNode] = field(compare=False)

    def node(self, path: Path) -> SignedNode:
        return self.nodes[path]

    def leaves(self) -> list[SignedNode]:
        return [n for n in self.nodes.values() if n.is_leaf]

    def leaves_under(self, path: Path) -> list[SignedNode]:
        k = len(path)
        return [n for n in self.leaves() if n.path[:k] == path]

    def branch(self, leaf: Path) -> list[tuple[SignedNode, int]]:
        """Ancestors of ``leaf`` bottom-up, each with the coordinate the branch passes through."""
        return [(self.nodes[leaf[:k]], leaf[k]) for k in range(len(leaf) - 1, -1, -1)]


def classify_tree(t: Term, sign: Sign = Sign.PLUS) -> SignedTree:
    nodes: dict[Path, SignedNode] = {}

    def walk(s: Term, sg: Sign, path: Path) -> None:
        nodes[path] = SignedNode(path, s, sg, node_roles(s, sg))
        if isinstance(s, (Kappa, Lambda)):
            return
        for i, c in enumerate(children(s)):
            walk(c, child_sign(sg, s, i), path + (i,))

    walk(t, sign, ())
    return SignedTree(t, sign, nodes)


class Side(str, Enum):
    LEFT = "lhs"
    RIGHT = "rhs"


def signed_trees(ineq: Inequality) -> dict[Side, SignedTree]:
    """The trees +lhs and -rhs."""
    return {Side.LEFT: classify_tree(ineq.lhs, Sign.PLUS), Side.RIGHT: classify_tree(ineq.rhs, Sign.MINUS)}


def is_l_inequality(ineq: Inequality) -> bool:
    """No nominals, conominals, kappa or lambda."""
    for t in (ineq.lhs, ineq.rhs):
        if pure_vars(t) or any(isinstance(s, (Kappa, Lambda)) for _, s in positions(t)):
            return False
    return True


def _require_l(ineq: Inequality) -> None:
    if not is_l_inequality(ineq):
        raise NotLInequalityException(f"Not an L-inequality (pure variables present): {render(ineq)}")


# -- critical branches ---------------------------------------------------------

Epsilon = dict[str, Polarity]


def is_critical(node: SignedNode, eps: Epsilon) -> bool:
    if not node.is_leaf:
        return False
    e = eps.get(node.var, Polarity.POSITIVE)
    return (node.sign is Sign.PLUS) == (e is Polarity.POSITIVE)


def agrees_dual(st: SignedTree, path: Path, eps: Epsilon) -> bool:
    """Every leaf below ``path`` is non-critical."""
    return not any(is_critical(n, eps) for n in st.leaves_under(path))


def split_branch(st: SignedTree, leaf: Path) -> tuple[list[SignedNode], list[SignedNode]] | None:
    """Split a branch into a PIA segment from the leaf and a skeleton segment above it.

    The PIA segment runs up to the highest PIA-only node; lattice nodes above it are
    taken as skeleton. None when the branch is not good.
    """
    ancestors = [n for n, _ in st.branch(leaf)]
    top = max((i for i, n in enumerate(ancestors) if n.pia_only), default=-1)
    lower, upper = ancestors[:top + 1], ancestors[top + 1:]
    if all(n.pia_capable for n in lower) and all(n.skeleton_capable for n in upper):
        return lower, upper
    return None


def is_good_branch(st: SignedTree, leaf: Path) -> bool:
    return split_branch(st, leaf) is not None


@final
@dataclass(frozen=True)
class CriticalBranch:
    side: Side
    leaf: Path
    var: str
    pia: tuple[Path, ...]


def critical_branches(ineq: Inequality, eps: Epsilon) -> list[CriticalBranch]:
    """Every critical branch of +lhs and -rhs; ``pia`` is empty for branches that are not good."""
    out = []
    for side, st in signed_trees(ineq).items():
        for leaf in st.leaves():
            if not is_critical(leaf, eps):
                continue
            split = split_branch(st, leaf.path)
            pia = tuple(n.path for n in split[0]) if split else ()
            out.append(CriticalBranch(side, leaf.path, leaf.var, pia))
    return out


def uniform_variables(ineq: Inequality) -> dict[str, Sign]:
    """Variables all of whose occurrences in +lhs and -rhs carry the same sign."""
    signs: dict[str, set[Sign]] = {}
    for st in signed_trees(ineq).values():
        for leaf in st.leaves():
            signs.setdefault(leaf.var, set()).add(leaf.sign)
    return {v: next(iter(s)) for v, s in signs.items() if len(s) == 1}


# -- witnesses -----------------------------------------------------------------------

class Label(str, Enum):
    NOT_INDUCTIVE = "not-inductive"
    INDUCTIVE = "inductive"
    SAHLQVIST = "sahlqvist"
    VERY_SIMPLE = "very-simple-sahlqvist"

    @property
    def rank(self) -> int:
        return list(Label).index(self)


class InductiveWitness(BaseModel):
    model_config = ConfigDict(frozen=True)

    epsilon: dict[str, Polarity]
    omega: tuple[tuple[str, str], ...] = ()
    label: Label = Label.INDUCTIVE
    definite: bool = True

    def polarity(self, var: str) -> Polarity:
        return self.epsilon.get(var, Polarity.POSITIVE)

    def below(self, a: str, b: str) -> bool:
        return (a, b) in self.omega

    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.epsilon)
        g.add_edges_from(self.omega)
        return g

    def elimination_order(self, variables: Iterable[str] | None = None) -> list[str]:
        """Omega-topological order, ties broken by the given order."""
        order = list(variables if variables is not None else self.epsilon)
        g = self.graph().subgraph(order)
        index = {v: i for i, v in enumerate(order)}
        return list(nx.lexicographical_topological_sort(g, key=lambda v: index.get(v, len(index))))

    def describe(self) -> str:
        eps = ",".join("1" if self.polarity(v) is Polarity.POSITIVE else "∂" for v in self.epsilon)
        names = ",".join(self.epsilon)
        text = f"ε({names})=({eps})"
        if self.omega:
            text += "; " + ", ".join(f"{a}<{b}" for a, b in self.omega)
        return text


def _constraints(trees: dict[Side, SignedTree], eps: Epsilon) -> tuple[set[tuple[str, str]], bool] | None:
    """Omega edges forced by the SRR nodes of the PIA segments, and whether the witness is definite."""
    edges: set[tuple[str, str]] = set()
    definite = True
    for st in trees.values():
        for leaf in st.leaves():
            if not is_critical(leaf, eps):
                continue
            split = split_branch(st, leaf.path)
            if split is None:
                return None
            for node in split[0]:
                t = node.term
                if (isinstance(t, Meet) and node.sign is Sign.PLUS) or (isinstance(t, Join) and node.sign is Sign.MINUS):
                    definite = False
                if Role.SRR not in node.roles:
                    continue
                through = leaf.path[len(node.path)]
                for h in range(len(children(t))):
                    if h == through:
                        continue
                    side_path = node.path + (h,)
                    if not agrees_dual(st, side_path, eps):
                        return None
                    for v in prop_vars(subterm(st.term, side_path)):
                        edges.add((v, leaf.var))
    return edges, definite


def _omega(variables: list[str], edges: set[tuple[str, str]]) -> tuple[tuple[str, str], ...] | None:
    g = nx.DiGraph()
    g.add_nodes_from(variables)
    g.add_edges_from(edges)
    if any(a == b for a, b in edges) or not nx.is_directed_acyclic_graph(g):
        return None
    closure = nx.transitive_closure_dag(g)
    index = {v: i for i, v in enumerate(variables)}
    return tuple(sorted(closure.edges, key=lambda e: (index[e[0]], index[e[1]])))


def _epsilon_key(w: InductiveWitness) -> tuple:
    return (not w.definite, -w.label.rank, tuple(0 if e is Polarity.POSITIVE else 1 for e in w.epsilon.values()))


def find_witnesses(ineq: Inequality) -> list[InductiveWitness]:
    """All (epsilon, Omega) witnesses, best first."""
    _require_l(ineq)
    variables = prop_vars(ineq)
    trees = signed_trees(ineq)
    found = []
    for combo in itertools.product((Polarity.POSITIVE, Polarity.NEGATIVE), repeat=len(variables)):
        eps = dict(zip(variables, combo))
        result = _constraints(trees, eps)
        if result is None:
            continue
        edges, definite = result
        omega = _omega(variables, edges)
        if omega is None:
            continue
        witness = InductiveWitness(epsilon=eps, omega=omega, definite=definite)
        label = _label(decompose(ineq, witness))
        found.append(witness.model_copy(update={"label": label}))
    found.sort(key=_epsilon_key)
    LOGGER.debug("%d witness(es) for %s", len(found), render(ineq))
    return found


def find_inductive(ineq: Inequality) -> InductiveWitness | None:
    witnesses = find_witnesses(ineq)
    return witnesses[0] if witnesses else None


def check_witness(ineq: Inequality, witness: InductiveWitness) -> bool:
    """Re-verify a witness without going through the search."""
    eps = witness.epsilon
    order = set(witness.omega)
    if any(a == b for a, b in order):
        return False
    if any((a, c) not in order for a, b in order for b2, c in order if b == b2):
        return False
    for st in signed_trees(ineq).values():
        for leaf in st.leaves():
            if not is_critical(leaf, eps):
                continue
            ancestors = st.branch(leaf.path)
            # the lowest skeleton-only node must have no PIA-only node above it
            roles = [n for n, _ in ancestors]
            first_skeleton_only = next((i for i, n in enumerate(roles) if not n.pia_capable), len(roles))
            if any(n.pia_only for n in roles[first_skeleton_only:]):
                return False
            last_pia_only = max((i for i, n in enumerate(roles) if n.pia_only), default=-1)
            for node, through in ancestors[:last_pia_only + 1]:
                if Role.SRR not in node.roles:
                    continue
                for h, child in enumerate(children(node.term)):
                    if h == through:
                        continue
                    side_path = node.path + (h,)
                    if not agrees_dual(st, side_path, eps):
                        return False
                    if any((v, leaf.var) not in order for v in prop_vars(child)):
                        return False
    return True


# -- decomposition ------------------------------------------------------------------------

class HoleKind(str, Enum):
    ALPHA = "x"
    BETA = "y"
    GAMMA = "z"
    DELTA = "w"

    @property
    def sort(self) -> Sort:
        return Sort.NOM if self in (HoleKind.ALPHA, HoleKind.GAMMA) else Sort.CONOM

    @property
    def critical(self) -> bool:
        return self in (HoleKind.ALPHA, HoleKind.BETA)


@final
@dataclass(frozen=True)
class Hole:
    name: str
    kind: HoleKind
    term: Term
    side: Side
    path: Path
    leaf: Path | None = None   # critical leaf inside ``term`` (alpha and beta only)

    @property
    def sign(self) -> Sign:
        return Sign.PLUS if self.kind in (HoleKind.ALPHA, HoleKind.GAMMA) else Sign.MINUS


@final
@dataclass(frozen=True)
class Decomposition:
    """(phi <= psi)[alpha/!x, beta/!y, gamma/!z, delta/!w]: a scattered skeleton with named holes."""

    skeleton: Inequality
    holes: tuple[Hole, ...]
    witness: InductiveWitness

    def of_kind(self, *kinds: HoleKind) -> list[Hole]:
        return [h for h in self.holes if h.kind in kinds]

    def hole(self, name: str) -> Hole:
        return next(h for h in self.holes if h.name == name)

    def side_holes(self, side: Side) -> list[Hole]:
        return [h for h in self.holes if h.side is side]


def decompose(ineq: Inequality, witness: InductiveWitness) -> Decomposition:
    """Cut +lhs and -rhs at maximal PIA-only nodes with critical leaves and at critical-free subtrees."""
    eps = witness.epsilon
    fresh = FreshNames(prop_vars(ineq))
    holes: list[Hole] = []
    sides: dict[Side, Term] = {}
    for side, st in signed_trees(ineq).items():
        cut: dict[Path, Hole] = {}

        def walk(path: Path) -> None:
            node = st.node(path)
            critical = [n for n in st.leaves_under(path) if is_critical(n, eps)]
            if not critical:
                kind = HoleKind.GAMMA if node.sign is Sign.PLUS else HoleKind.DELTA
            elif node.is_leaf or node.pia_only:
                kind = HoleKind.ALPHA if node.sign is Sign.PLUS else HoleKind.BETA
            else:
                for i in range(len(children(node.term))):
                    walk(path + (i,))
                return
            leaf = critical[0].path[len(path):] if critical else None
            cut[path] = Hole(fresh.name(kind.value), kind, node.term, side, path, leaf)

        walk(())
        term = st.term
        for path in sorted(cut, key=len, reverse=True):
            term = replace_at(term, path, PropVar(cut[path].name))
        sides[side] = term
        holes.extend(sorted(cut.values(), key=lambda h: h.path))
    return Decomposition(Inequality(sides[Side.LEFT], sides[Side.RIGHT]), tuple(holes), witness)


def _only_unary(t: Term) -> bool:
    return all(len(children(s)) <= 1 for _, s in positions(t))


def _label(d: Decomposition) -> Label:
    critical = d.of_kind(HoleKind.ALPHA, HoleKind.BETA)
    if all(isinstance(h.term, PropVar) for h in critical):
        return Label.VERY_SIMPLE
    if all(_only_unary(h.term) for h in critical):
        return Label.SAHLQVIST
    return Label.INDUCTIVE


class Classification(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: Label
    witnesses: tuple[InductiveWitness, ...] = ()

    @property
    def best(self) -> InductiveWitness | None:
        return self.witnesses[0] if self.witnesses else None


def classify_inequality(ineq: Inequality) -> Classification:
    witnesses = find_witnesses(ineq)
    if not witnesses:
        return Classification(label=Label.NOT_INDUCTIVE)
    label = max((w.label for w in witnesses), key=lambda lab: lab.rank)
    LOGGER.info("Classified %s as %s", render(ineq), label.value)
    return Classification(label=label, witnesses=tuple(witnesses))


# -- crypto-inductive -------------------------------------------------------------------------

def _is_l_node(node: SignedNode, sig: Signature) -> bool:
    if isinstance(node.term, App):
        return sig.is_base(node.term.op)
    return not isinstance(node.term, (Kappa, Lambda))


def _conservative(node: SignedNode, through: int, sig: Signature) -> bool:
    """Adjunction-conservative SRA node or SRR node residuation-conservative in ``through``."""
    if not node.pia_capable:
        return False
    t = node.term
    if isinstance(t, (Meet, Join)):
        return True
    if isinstance(t, App):
        if t.op.origin is Origin.LATTICE:
            return True
        coordinate = 1 if Role.SRA in node.roles else through + 1
        return sig.is_base(sig.residual_of(t.op, coordinate))
    return False


def is_splittable(st: SignedTree, leaf: Path, sig: Signature) -> bool:
    ancestors = st.branch(leaf)
    i = 0
    while i < len(ancestors) and _conservative(ancestors[i][0], ancestors[i][1], sig):
        i += 1
    return all(_is_l_node(n, sig) for n, _ in ancestors[i:])


def _maximal(variables: list[str], omega: set[tuple[str, str]]) -> list[str]:
    return [v for v in variables if not any((v, w) in omega for w in variables)]


def is_unpackable(st: SignedTree, eps: Epsilon, omega: Iterable[tuple[str, str]], sig: Signature) -> bool:
    order = set(omega)
    if any(is_critical(n, eps) for n in st.leaves()):
        return False
    variables = prop_vars(st.term)
    if isinstance(st.term, PropVar) or not variables:
        return True
    for p0 in _maximal(variables, order):
        for leaf in st.leaves():
            if leaf.var != p0 or not is_splittable(st, leaf.path, sig):
                continue
            if all(_sides_unpackable(st, node, through, eps, order, sig)
                   for node, through in st.branch(leaf.path) if Role.SRR in node.roles):
                return True
    return False


def _sides_unpackable(st: SignedTree, node: SignedNode, through: int, eps: Epsilon,
                      omega: set[tuple[str, str]], sig: Signature) -> bool:
    for h, child in enumerate(children(node.term)):
        if h == through:
            continue
        side = classify_tree(child, child_sign(node.sign, node.term, h))
        if not is_unpackable(side, eps, omega, sig):
            return False
    return True


def _crypto_conditions(trees: dict[Side, SignedTree], eps: Epsilon, omega: tuple[tuple[str, str], ...],
                       sig: Signature) -> bool:
    for st in trees.values():
        for leaf in st.leaves():
            ancestors = [n for n, _ in st.branch(leaf.path)]
            if is_critical(leaf, eps):
                if not all(_is_l_node(n, sig) for n in ancestors):
                    return False
                continue
            proper = next((n for n in reversed(ancestors) if not _is_l_node(n, sig)), None)
            if proper is None:
                continue
            if not is_unpackable(classify_tree(proper.term, proper.sign), eps, omega, sig):
                return False
    return True


def is_crypto_inductive(ineq: Inequality, sig: Signature) -> InductiveWitness | None:
    """A very simple Sahlqvist witness meeting the crypto-inductive conditions, if any."""
    trees = signed_trees(ineq)
    for witness in find_witnesses(ineq):
        if witness.label is not Label.VERY_SIMPLE:
            continue
        for omega in dict.fromkeys((witness.omega, ())):
            if _crypto_conditions(trees, witness.epsilon, omega, sig):
                LOGGER.debug("Crypto-inductive for %s", witness.describe())
                return witness.model_copy(update={"omega": omega})
    return None
