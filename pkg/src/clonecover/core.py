"""Grid points, finite index tuples, finitely supported partial functions,
and the term AST the whole pipeline evaluates.

Everything here is immutable and pure.  Partial application returns ``None``
as the undefined marker; it is never an error to evaluate outside a domain.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence, Union


class Point(NamedTuple):
    """A grid point with natural coordinates.

    ``y`` selects the line (the horizontal level), ``x`` the column within it.
    """

    x: int
    y: int

    def __repr__(self) -> str:
        return f"({self.x}|{self.y})"


ORIGIN = Point(0, 0)

IndexSet = frozenset  # finite sets of positive naturals


class IndexMismatchError(ValueError):
    """Index sets of two values do not line up as required."""


class OverlapError(ValueError):
    """Domains or index sets overlap where disjointness is required."""


def idx(*members: int) -> IndexSet:
    return frozenset(members)


def full_index(m: int) -> IndexSet:
    """The canonical index set {1, ..., m}."""
    return frozenset(range(1, m + 1))


@dataclass(frozen=True, order=True)
class MTuple:
    """A total map from a finite index set to points, stored canonically.

    Entries are kept sorted by index so tuples are hashable and totally
    ordered; the ordering is only used for deterministic iteration.
    """

    entries: tuple  # tuple of (index, Point), sorted by index

    @staticmethod
    def of(mapping: Mapping[int, Point]) -> "MTuple":
        return MTuple(tuple(sorted((i, Point(*p)) for i, p in mapping.items())))

    @staticmethod
    def empty() -> "MTuple":
        return _EMPTY_TUPLE

    @property
    def indices(self) -> IndexSet:
        return frozenset(i for i, _ in self.entries)

    def __getitem__(self, i: int) -> Point:
        for j, p in self.entries:
            if j == i:
                return p
        raise KeyError(i)

    def __contains__(self, i: int) -> bool:
        return any(j == i for j, _ in self.entries)

    def points(self) -> tuple:
        return tuple(p for _, p in self.entries)

    def items(self):
        return self.entries

    def restrict(self, s: IndexSet) -> "MTuple":
        return MTuple(tuple((i, p) for i, p in self.entries if i in s))

    def without(self, s: IndexSet) -> "MTuple":
        return MTuple(tuple((i, p) for i, p in self.entries if i not in s))

    def union(self, other: "MTuple") -> "MTuple":
        """Union of an S-tuple with a T-tuple over disjoint index sets."""
        if self.indices & other.indices:
            raise OverlapError(
                f"index sets overlap: {sorted(self.indices & other.indices)}"
            )
        return MTuple(tuple(sorted(self.entries + other.entries)))

    def min_y(self) -> Optional[int]:
        """Least y-coordinate among components; None for the empty tuple."""
        if not self.entries:
            return None
        return min(p.y for _, p in self.entries)

    def __repr__(self) -> str:
        inner = ", ".join(f"{i}:{p!r}" for i, p in self.entries)
        return f"<{inner}>"


_EMPTY_TUPLE = MTuple(())

Value = Union[Point, MTuple]


class PartialFn:
    """A finitely supported partial function from M-tuples to points or tuples.

    ``codomain`` is ``None`` for point-valued functions, or the index set of
    the output tuples for tuple-valued ones.  The graph is a plain dict; by
    convention it is never mutated after construction.
    """

    __slots__ = ("arity", "codomain", "graph")

    def __init__(self, arity: IndexSet, graph: Mapping[MTuple, Value],
                 codomain: Optional[IndexSet] = None):
        self.arity = frozenset(arity)
        self.codomain = None if codomain is None else frozenset(codomain)
        g = dict(graph)
        for u, v in g.items():
            if u.indices != self.arity:
                raise IndexMismatchError(
                    f"domain tuple {u!r} does not match arity {sorted(self.arity)}"
                )
            if self.codomain is None:
                if not isinstance(v, Point):
                    raise IndexMismatchError(f"expected point value, got {v!r}")
            else:
                if not isinstance(v, MTuple) or v.indices != self.codomain:
                    raise IndexMismatchError(
                        f"value {v!r} does not match codomain {sorted(self.codomain)}"
                    )
        self.graph = g

    # -- constructors -------------------------------------------------

    @staticmethod
    def point_valued(arity: IndexSet, graph: Mapping[MTuple, Point]) -> "PartialFn":
        return PartialFn(arity, graph, None)

    @staticmethod
    def tuple_valued(arity: IndexSet, codomain: IndexSet,
                     graph: Mapping[MTuple, MTuple]) -> "PartialFn":
        return PartialFn(arity, graph, codomain)

    @staticmethod
    def identity_on(tuples: Iterable[MTuple], arity: IndexSet) -> "PartialFn":
        return PartialFn(arity, {u: u for u in tuples}, arity)

    @staticmethod
    def empty(arity: IndexSet, codomain: Optional[IndexSet] = None) -> "PartialFn":
        return PartialFn(arity, {}, codomain)

    # -- basic queries ------------------------------------------------

    def __call__(self, u: MTuple) -> Optional[Value]:
        return eval_partial(self, u)

    def domain(self) -> frozenset:
        return frozenset(self.graph)

    def values(self) -> frozenset:
        return frozenset(self.graph.values())

    def is_point_valued(self) -> bool:
        return self.codomain is None

    def __len__(self) -> int:
        return len(self.graph)

    def sorted_items(self):
        """Graph entries in canonical (domain-tuple) order."""
        return sorted(self.graph.items())

    def component(self, i: int) -> "PartialFn":
        """The i-th point-valued component of a tuple-valued function."""
        if self.codomain is None or i not in self.codomain:
            raise IndexMismatchError(f"no component {i}")
        return PartialFn(self.arity, {u: v[i] for u, v in self.graph.items()})

    def restrict(self, keys: Iterable[MTuple]) -> "PartialFn":
        ks = set(keys)
        return PartialFn(
            self.arity,
            {u: v for u, v in self.graph.items() if u in ks},
            self.codomain,
        )

    def is_subfunction_of(self, other: "PartialFn") -> bool:
        return (
            self.arity == other.arity
            and self.codomain == other.codomain
            and all(other.graph.get(u) == v for u, v in self.graph.items())
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, PartialFn):
            return NotImplemented
        return (
            self.arity == other.arity
            and self.codomain == other.codomain
            and self.graph == other.graph
        )

    def __repr__(self) -> str:
        kind = "pt" if self.codomain is None else f"tup{sorted(self.codomain)}"
        return (
            f"PartialFn(arity={sorted(self.arity)}, {kind}, "
            f"|graph|={len(self.graph)})"
        )


# -- the composition / star / hash / fiber algebra --------------------


def eval_partial(p: PartialFn, u: MTuple) -> Optional[Value]:
    """Graph lookup; None outside the domain."""
    if u.indices != p.arity:
        raise IndexMismatchError(
            f"tuple over {sorted(u.indices)} fed to function of arity "
            f"{sorted(p.arity)}"
        )
    return p.graph.get(u)


def compose(outer: PartialFn, inner: PartialFn) -> PartialFn:
    """outer after inner; defined where inner lands inside dom(outer)."""
    if inner.codomain is None or inner.codomain != outer.arity:
        raise IndexMismatchError(
            "inner function must be tuple-valued onto the outer arity"
        )
    graph = {}
    for u, mid in inner.graph.items():
        if mid in outer.graph:
            graph[u] = outer.graph[mid]
    return PartialFn(inner.arity, graph, outer.codomain)


def disjoint_union(parts: Sequence[PartialFn]) -> PartialFn:
    """Union of functions with pairwise disjoint domains."""
    parts = list(parts)
    if not parts:
        raise ValueError("disjoint_union of an empty family needs an arity; "
                         "pass at least one (possibly empty) function")
    arity, codomain = parts[0].arity, parts[0].codomain
    graph = {}
    for p in parts:
        if p.arity != arity or p.codomain != codomain:
            raise IndexMismatchError("union parts must share arity and codomain")
        for u, v in p.graph.items():
            if u in graph:
                if graph[u] == v:
                    raise OverlapError(f"domains overlap at {u!r}")
                raise OverlapError(f"domains overlap at {u!r} with clashing values")
            graph[u] = v
    return PartialFn(arity, graph, codomain)


def shrink_inner(g: PartialFn, g_prime: PartialFn, h_prime: PartialFn) -> PartialFn:
    """Restrict h' to dom(g) so that g = g' o h exactly.

    Requires g to be a subfunction of g' o h' (checked; the first tuple of
    disagreement is reported otherwise).
    """
    recomposed = compose(g_prime, h_prime)
    for u, v in sorted(g.graph.items()):
        if recomposed.graph.get(u) != v:
            raise ValueError(
                f"g is not contained in g' o h': disagreement at {u!r} "
                f"(g gives {v!r}, composition gives {recomposed.graph.get(u)!r})"
            )
    return h_prime.restrict(g.domain())


def bar_extend(p: PartialFn, universe: Iterable[MTuple]) -> PartialFn:
    """Totalize a point-valued function over a finite universe with (0|0)."""
    if p.codomain is not None:
        raise IndexMismatchError("bar extension applies to point-valued functions")
    universe = set(universe)
    missing_dom = p.domain() - universe
    if missing_dom:
        raise ValueError(
            f"dom(p) is not inside the universe, e.g. {sorted(missing_dom)[0]!r}"
        )
    graph = dict(p.graph)
    for u in universe:
        if u not in graph:
            graph[u] = ORIGIN
    return PartialFn(p.arity, graph)


def star_set(c: MTuple, tuples: Iterable[MTuple]) -> frozenset:
    """Prefix every T-tuple in the set with the fixed S-tuple c."""
    return frozenset(c.union(z) for z in tuples)


def star_fn(c: MTuple, g: PartialFn) -> PartialFn:
    """Relabel g's domain tuples by gluing the fixed block c onto them."""
    if c.indices & g.arity:
        raise OverlapError("c's index set must be disjoint from g's arity")
    graph = {c.union(z): v for z, v in g.graph.items()}
    return PartialFn(c.indices | g.arity, graph, g.codomain)


def hash_fn(c: MTuple, g: PartialFn) -> PartialFn:
    """The full-arity version of star: keep the c-block fixed on both sides."""
    if g.codomain is None or g.codomain != g.arity:
        raise IndexMismatchError("hash requires a T-to-T tuple-valued function")
    if c.indices & g.arity:
        raise OverlapError("c's index set must be disjoint from g's arity")
    graph = {c.union(z): c.union(w) for z, w in g.graph.items()}
    m = c.indices | g.arity
    return PartialFn(m, graph, m)


def fiber(g: PartialFn, s: IndexSet, c: MTuple) -> PartialFn:
    """Fix the S-indexed arguments of g to c; a function of the rest."""
    s = frozenset(s)
    if not s <= g.arity:
        raise IndexMismatchError(
            f"S={sorted(s)} is not a subset of the arity {sorted(g.arity)}"
        )
    if c.indices != s:
        raise IndexMismatchError("c must be indexed exactly by S")
    t = g.arity - s
    graph = {}
    for u, v in g.graph.items():
        if u.restrict(s) == c:
            graph[u.without(s)] = v
    return PartialFn(t, graph, g.codomain)


def fiber_keys(g: PartialFn, s: IndexSet) -> list:
    """The S-projections occurring in dom(g), in canonical order."""
    s = frozenset(s)
    return sorted({u.restrict(s) for u in g.graph})


# -- terms ------------------------------------------------------------

WITNESS_ATOM = "witness"
CI_ATOM = "ci"


@dataclass(frozen=True)
class Proj:
    """Projection onto the k-th argument."""

    k: int


@dataclass(frozen=True)
class App:
    """Application of a named atom to child terms, one per arity index."""

    name: str
    children: tuple


TermNode = Union[Proj, App]


@dataclass(frozen=True)
class AtomBinding:
    """An atom of the term environment: a partial function plus its class."""

    fn: PartialFn
    kind: str  # WITNESS_ATOM or CI_ATOM
    certificate: object = None


class UnresolvedAtomError(KeyError):
    """A term references an atom name missing from its environment."""


@dataclass
class Term:
    """A term over named atoms and projections, with its atom environment."""

    root: TermNode
    env: dict  # name -> AtomBinding
    arity: IndexSet

    def __post_init__(self):
        self.arity = frozenset(self.arity)

    def size(self) -> int:
        return _node_size(self.root)

    def depth(self) -> int:
        return _node_depth(self.root)

    def atom_counts(self) -> dict:
        counts: dict = {}
        _count_atoms(self.root, counts)
        return counts

    def witness_atoms(self) -> list:
        return sorted(n for n, b in self.env.items() if b.kind == WITNESS_ATOM)


def _node_size(node: TermNode) -> int:
    if isinstance(node, Proj):
        return 1
    return 1 + sum(_node_size(ch) for ch in node.children)


def _node_depth(node: TermNode) -> int:
    if isinstance(node, Proj):
        return 1
    return 1 + max((_node_depth(ch) for ch in node.children), default=0)


def _count_atoms(node: TermNode, counts: dict) -> None:
    if isinstance(node, App):
        counts[node.name] = counts.get(node.name, 0) + 1
        for ch in node.children:
            _count_atoms(ch, counts)


def eval_term(t: Term, u: MTuple) -> Optional[Point]:
    """Recursive evaluation; undefined propagates as None."""
    if u.indices != t.arity:
        raise IndexMismatchError(
            f"tuple over {sorted(u.indices)} fed to term of arity "
            f"{sorted(t.arity)}"
        )
    return _eval_node(t.root, u, t.env)


def _eval_node(node: TermNode, u: MTuple, env: Mapping[str, AtomBinding]):
    if isinstance(node, Proj):
        return u[node.k]
    if node.name not in env:
        raise UnresolvedAtomError(node.name)
    fn = env[node.name].fn
    order = sorted(fn.arity)
    if len(node.children) != len(order):
        raise IndexMismatchError(
            f"atom {node.name} has arity {len(order)}, got "
            f"{len(node.children)} children"
        )
    vals = []
    for ch in node.children:
        v = _eval_node(ch, u, env)
        if v is None:
            return None
        vals.append(v)
    arg = MTuple.of(dict(zip(order, vals)))
    return fn.graph.get(arg)


def substitute(node: TermNode, replacements: Mapping[int, TermNode]) -> TermNode:
    """Replace projection leaves by the given subterms."""
    if isinstance(node, Proj):
        return replacements.get(node.k, node)
    return App(node.name, tuple(substitute(ch, replacements) for ch in node.children))
