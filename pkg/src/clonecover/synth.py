"""Witness normalization and term synthesis for hereditarily thrifty
functions, plus the width certificates for the assembled selector table.

The shape of the construction: a unary witness is normalized so that the
encoded input (0 | n (+) k) maps exactly to (k | n); a family of width-1
helper maps h^{S,j} encodes, for every argument slot, the pair (per-fiber
line bound, argument line) through the same injective code; and a selector
table Q recovers the target value from the input together with the witness's
outputs on the helpers.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Tuple

from .analysis import (
    IdealVerdict,
    all_subsets,
    ci_fragment_check,
    is_hereditarily_thrifty,
    k_table,
    width,
)
from .core import (
    App,
    AtomBinding,
    CI_ATOM,
    IndexMismatchError,
    IndexSet,
    MTuple,
    ORIGIN,
    PartialFn,
    Point,
    Proj,
    Term,
    WITNESS_ATOM,
    bar_extend,
    eval_term,
    fiber,
    fiber_keys,
    full_index,
    substitute,
)
from .decompose import AdmissibilityError, DecompositionTrace, hereditary_decompose


def oplus(n: int, k: int) -> int:
    """The injective pair code n^2 + k, defined for k < n."""
    if not 0 <= k < n:
        raise ValueError(f"oplus requires 0 <= k < n, got n={n}, k={k}")
    return n * n + k


def math_factorial(m: int) -> int:
    out = 1
    for i in range(2, m + 1):
        out *= i
    return out


# -- unary reduction --------------------------------------------------


def width1_slices(points: Iterable[Point]) -> list:
    """Split a point set into width-1 slices (t-th point per line, by x)."""
    by_line: dict = {}
    for p in sorted(points):
        by_line.setdefault(p.y, []).append(p)
    depth = max((len(ps) for ps in by_line.values()), default=0)
    return [
        frozenset(ps[t] for ps in by_line.values() if len(ps) > t)
        for t in range(depth)
    ]


def reduce_to_unary(f: PartialFn, candidates: Sequence[PartialFn],
                    width_threshold: int = 1) -> PartialFn:
    """Search for a unary composite of f with the candidates that visibly
    blows up width.

    Candidate tuples are tried in lexicographic order; the first composite
    mapping some width-1 slice of its domain to an image of width above the
    threshold is returned.  Exhaustion is an error (the candidate set simply
    contained no witness), not a refutation.
    """
    arity = sorted(f.arity)
    for c in candidates:
        if sorted(c.arity) != [1] or not c.is_point_valued():
            raise IndexMismatchError("candidates must be unary point-valued")
    if len(arity) == 1:
        # identity candidate first: the witness may already qualify as is
        if _has_width_blowup(f, width_threshold):
            return f
    for combo in itertools.product(candidates, repeat=len(arity)):
        graph = {}
        common = set.intersection(*(set(c.domain()) for c in combo))
        for d in sorted(common):
            args = MTuple.of({
                i: combo[pos].graph[d] for pos, i in enumerate(arity)
            })
            if args in f.graph:
                graph[d] = f.graph[args]
        composite = PartialFn(full_index(1), graph)
        if _has_width_blowup(composite, width_threshold):
            return composite
    raise AdmissibilityError("no unary witness in candidate set")


def _has_width_blowup(p: PartialFn, width_threshold: int) -> bool:
    """Some width-1 slice of dom(p) maps to an image wider than the bound."""
    dom_points = {u.points()[0] for u in p.domain()}
    for sl in width1_slices(dom_points):
        test = [MTuple.of({1: pt}) for pt in sl]
        verdict = ci_fragment_check(p, [test], width_threshold)
        if not verdict.passed:
            return True
    return False


# -- normalization ----------------------------------------------------


@dataclass
class NormalizedWitness:
    """A unary witness brought into the (0 | n (+) k) |-> (k | n) shape.

    ``relabel_domain`` sends each normalized input to the original preimage,
    ``line_map`` and ``row_map`` are the (injective) output relabelings; the
    normalized graph is their composition with the original witness, plus
    the harmless (0|0) |-> (0|0) entry used for undefined helper slots.
    """

    f_star: PartialFn
    horizon: int
    relabel_domain: dict  # Point (0 | n(+)k) -> original domain Point
    line_map: dict  # original line index -> normalized line index
    row_map: dict  # original row index -> normalized row index


def normalize_f(f_unary: PartialFn, horizon: int) -> NormalizedWitness:
    """Permute lines, rows, and domain labels so the witness satisfies the
    normalized shape for all k < n < horizon.

    Deterministic choices: target lines are filled from the largest demand
    down, each taking the smallest-label unused image line with enough
    points; points within a line are ordered by x, preimages by y.
    """
    if sorted(f_unary.arity) != [1] or not f_unary.is_point_valued():
        raise IndexMismatchError("witness must be unary and point-valued")
    if horizon < 2:
        raise ValueError("horizon must be at least 2")

    # image line -> list of (point, preimage), points ordered by x, each
    # image point represented by its least-y preimage
    by_line: dict = {}
    pre_of: dict = {}
    for u, v in sorted(f_unary.graph.items(), key=lambda it: it[0].points()[0].y):
        d = u.points()[0]
        if v not in pre_of:
            pre_of[v] = d
    for v, d in pre_of.items():
        by_line.setdefault(v.y, []).append((v, d))
    for line in by_line:
        by_line[line].sort(key=lambda vd: vd[0].x)

    chosen_line: dict = {}
    used_lines: set = set()
    for n in range(horizon - 1, 0, -1):
        options = [
            line for line, pts in sorted(by_line.items())
            if line not in used_lines and len(pts) >= n
        ]
        if not options:
            raise AdmissibilityError(
                f"no unused image line with at least {n} points"
            )
        chosen_line[n] = options[0]
        used_lines.add(options[0])

    line_map: dict = {}
    row_map: dict = {}
    relabel_domain: dict = {}
    graph = {ORIGIN: ORIGIN}  # harmless value for undefined helper slots
    for n in range(1, horizon):
        line = chosen_line[n]
        line_map[line] = n
        for k in range(n):
            v, d = by_line[line][k]
            if d.x != 0:
                raise AdmissibilityError(
                    f"witness preimage {d!r} is off the x=0 column"
                )
            if v.x in row_map and row_map[v.x] != k:
                raise AdmissibilityError(
                    f"row {v.x} cannot be relabeled consistently"
                )
            row_map[v.x] = k
            code = Point(0, oplus(n, k))
            if code in relabel_domain and relabel_domain[code] != d:
                raise AdmissibilityError("clashing domain relabels")
            relabel_domain[code] = d
            graph[code] = Point(k, n)

    f_star = PartialFn(full_index(1), {
        MTuple.of({1: p}): v for p, v in graph.items()
    })
    return NormalizedWitness(
        f_star=f_star,
        horizon=horizon,
        relabel_domain=relabel_domain,
        line_map=line_map,
        row_map=row_map,
    )


def witness_point(nw: NormalizedWitness, p: Point) -> Optional[Point]:
    """Evaluate the normalized witness at a bare point."""
    return nw.f_star.graph.get(MTuple.of({1: p}))


# -- the (S, j) index and helper family -------------------------------


@dataclass(frozen=True)
class PStarIndex:
    """Deterministic enumeration of the pairs (S, j) with j outside S.

    Within the selector table's combined arity, the input occupies indices
    1..m and the pair at position t occupies slot m + 1 + t.
    """

    index_set: IndexSet
    pairs: tuple  # ordered (frozenset S, j) pairs

    @property
    def m(self) -> int:
        return len(self.index_set)

    def slot(self, s: IndexSet, j: int) -> int:
        return self.m + 1 + self.pairs.index((frozenset(s), j))

    def combined_arity(self) -> IndexSet:
        return frozenset(range(1, self.m + len(self.pairs) + 1))


def pstar(index_set: IndexSet) -> PStarIndex:
    index_set = frozenset(index_set)
    if index_set != full_index(len(index_set)):
        raise ValueError("index set must be the canonical {1, ..., m}")
    pairs = []
    for s in all_subsets(sorted(index_set)):
        for j in sorted(index_set - s):
            pairs.append((s, j))
    return PStarIndex(index_set=index_set, pairs=tuple(pairs))


def fiber_k_tables(q: PartialFn, theta: int) -> dict:
    """K-tables for every fiber of q, keyed by (S, fiber key)."""
    tables = {}
    for s in all_subsets(sorted(q.arity)):
        for c in fiber_keys(q, s):
            tables[(s, c)] = k_table(fiber(q, s, c), theta)
    return tables


def build_h(q: PartialFn, s: IndexSet, j: int, k_tables: Mapping) -> PartialFn:
    """The helper map for one (S, j) pair.

    For u = c (union) z in dom(q): defined exactly when z_j's line index lies
    below the fiber's bound K at q(u)'s line, in which case it returns
    (0 | K (+) z_j^y).  The range sits in the x = 0 row, hence has width 1.
    """
    s = frozenset(s)
    if j in s or j not in q.arity:
        raise ValueError(f"j={j} must lie outside S and inside the arity")
    graph = {}
    for u, v in q.graph.items():
        c = u.restrict(s)
        table = k_tables.get((s, c))
        if table is None or v.y not in table:
            raise AdmissibilityError(
                f"missing K entry for fiber ({sorted(s)}, {c!r}) at line {v.y}; "
                "q was not certified hereditarily thrifty"
            )
        big_k = table[v.y]
        zy = u[j].y
        if zy < big_k:
            graph[u] = Point(0, oplus(big_k, zy))
    return PartialFn(q.arity, graph)


def build_h_family(q: PartialFn, ps: PStarIndex, k_tables: Mapping) -> dict:
    return {
        (s, j): build_h(q, s, j, k_tables) for s, j in ps.pairs
    }


def helper_slot_value(h: PartialFn, nw: NormalizedWitness, u: MTuple) -> Point:
    """The witness's output on a helper, with the bar-extension convention:
    an undefined helper feeds (0|0) through the witness."""
    hv = h.graph.get(u, ORIGIN)
    out = witness_point(nw, hv)
    if out is None:
        raise AdmissibilityError(
            f"witness not defined at helper output {hv!r}; horizon too small"
        )
    return out


def build_Q(q: PartialFn, h_family: Mapping, nw: NormalizedWitness,
            ps: PStarIndex) -> PartialFn:
    """The selector table: defined at (u, v) exactly when every v-slot equals
    the witness's output on the corresponding helper at u; value q(u)."""
    graph = {}
    for u, val in q.graph.items():
        entries = dict(u.items())
        for s, j in ps.pairs:
            entries[ps.slot(s, j)] = helper_slot_value(
                h_family[(s, j)], nw, u)
        graph[MTuple.of(entries)] = val
    return PartialFn(ps.combined_arity(), graph)


# -- term assembly ----------------------------------------------------

SELECTOR_ATOM = "Q"
WITNESS_NAME = "f*"


def helper_name(s: IndexSet, j: int) -> str:
    return "h[{{{}}},{}]".format(",".join(map(str, sorted(s))), j)


def assemble_term(q: PartialFn, nw: NormalizedWitness, h_family: Mapping,
                  q_table: PartialFn, ps: PStarIndex) -> Term:
    """The synthesized term for q: the selector applied to the raw arguments
    and the witness's outputs on the bar-extended helpers."""
    m = len(q.arity)
    env = {
        SELECTOR_ATOM: AtomBinding(q_table, CI_ATOM),
        WITNESS_NAME: AtomBinding(nw.f_star, WITNESS_ATOM),
    }
    projections = tuple(Proj(i) for i in sorted(q.arity))
    children = list(projections)
    for s, j in ps.pairs:
        name = helper_name(s, j)
        env[name] = AtomBinding(
            bar_extend(h_family[(s, j)], q.domain()), CI_ATOM)
        children.append(App(WITNESS_NAME, (App(name, projections),)))
    root = App(SELECTOR_ATOM, tuple(children))
    return Term(root=root, env=env, arity=q.arity)


# -- width certificates for the selector ------------------------------


def complete_width1(points: Iterable[Point], lines_needed: Iterable[int]) -> frozenset:
    """Extend a width-1 set so it meets every needed line (default x = 0)."""
    points = frozenset(Point(*p) for p in points)
    if width(points).width > 1:
        raise ValueError("factor has width above 1")
    present = {p.y for p in points}
    extra = {Point(0, n) for n in lines_needed if n not in present}
    return points | extra


def _selector_point(points: frozenset, n: int) -> int:
    """The unique column k with (k|n) in a line-complete width-1 set."""
    hits = [p.x for p in points if p.y == n]
    if not hits:
        raise ValueError(
            f"factor does not meet line {n}; run complete_width1 first"
        )
    return hits[0]


@dataclass
class MainLemmaReport:
    """Brute-force width of the selector's image over a width-1 product."""

    observed_width: int
    bound: int
    passed: bool
    image: frozenset


def verify_main_lemma(q_table: PartialFn, factors: Mapping, m: int) -> MainLemmaReport:
    """Image width of the selector over a product of width-1 factors.

    ``factors`` maps each input index i and each (S, j) pair to a width-1
    point set; the product is intersected with the table's finite domain.
    """
    ps = pstar(full_index(m))
    for key, pts in factors.items():
        if width(pts).width > 1:
            raise ValueError(f"factor {key!r} has width above 1")
    image = set()
    for uv, val in q_table.graph.items():
        if _in_product(uv, factors, ps):
            image.add(val)
    bound = math_factorial(m)
    w = width(image).width
    return MainLemmaReport(
        observed_width=w, bound=bound, passed=w <= bound,
        image=frozenset(image),
    )


def _in_product(uv: MTuple, factors: Mapping, ps: PStarIndex) -> bool:
    for i in sorted(ps.index_set):
        if uv[i] not in factors[i]:
            return False
    for s, j in ps.pairs:
        if uv[ps.slot(s, j)] not in factors[(s, j)]:
            return False
    return True


@dataclass
class UniquenessReport:
    """Per-(line, permutation) candidate tuple and the enumeration check."""

    line: int
    perm: tuple
    candidate: dict  # index -> Point (may be partial when a K is missing)
    qualifying: tuple  # the (u, v) tuples found by brute force
    passed: bool
    detail: str = ""


def main_lemma_certify(q_table: PartialFn, k_tables: Mapping, factors: Mapping,
                       m: int, n: int, perm: Sequence[int]) -> UniquenessReport:
    """Compute the unique candidate input for a target line and check, by
    enumeration over the table's domain, that every qualifying entry is it.

    The recursion, under the reindexing perm: at step j the fiber fixed so
    far gives a bound k_j at line n; the (S,j)-factor selects the line b_j
    at k_j, and the j-th input factor selects the column a_j at b_j.
    """
    ps = pstar(full_index(m))
    perm = tuple(perm)
    candidate: dict = {}
    prefix = MTuple.empty()
    complete = True
    for step in range(1, m + 1):
        s = frozenset(perm[:step - 1])
        j = perm[step - 1]
        table = k_tables.get((s, prefix))
        if table is None or n not in table:
            complete = False
            break
        kj = table[n]
        bj = _selector_point(frozenset(factors[(s, j)]), kj)
        aj = _selector_point(frozenset(factors[j]), bj)
        candidate[j] = Point(aj, bj)
        prefix = prefix.union(MTuple.of({j: Point(aj, bj)}))

    qualifying = []
    for uv, val in sorted(q_table.graph.items()):
        if val.y != n or not _in_product(uv, factors, ps):
            continue
        ys = [uv[perm[t]].y for t in range(m)]
        if ys == sorted(ys):
            qualifying.append(uv)

    if not complete:
        passed = not qualifying
        detail = "" if passed else "qualifying entry despite missing K chain"
    elif len(qualifying) > 1:
        passed, detail = False, "more than one qualifying entry"
    elif qualifying:
        u = qualifying[0]
        passed = all(u[j] == candidate[j] for j in candidate)
        detail = "" if passed else "qualifying entry differs from candidate"
    else:
        passed, detail = True, "vacuous"
    return UniquenessReport(
        line=n, perm=perm, candidate=candidate,
        qualifying=tuple(qualifying), passed=passed, detail=detail,
    )


@dataclass
class SelectorWidthVerdict:
    """Observed image width of the selector on a width-w product vs the
    slice-union bound."""

    w: int
    factor_count: int
    bound: int
    observed: tuple  # per test product
    passed: bool


def verify_Q_in_CI(q_table: PartialFn, test_products: Sequence[Mapping],
                   w: int, m: int) -> SelectorWidthVerdict:
    """Check the selector's image width over width-w factor products.

    Each factor splits into at most w width-1 slices, and each slice product
    maps to a set of width at most m!, so the union bound is
    w^(number of factors) * m!.
    """
    ps = pstar(full_index(m))
    factor_count = m + len(ps.pairs)
    bound = (w ** factor_count) * math_factorial(m)
    observed = []
    for factors in test_products:
        for key, pts in factors.items():
            if width(pts).width > w:
                raise ValueError(f"factor {key!r} has width above {w}")
        image = {
            val for uv, val in q_table.graph.items()
            if _in_product(uv, factors, ps)
        }
        observed.append(width(image).width)
    return SelectorWidthVerdict(
        w=w, factor_count=factor_count, bound=bound,
        observed=tuple(observed),
        passed=all(o <= bound for o in observed),
    )


# -- end to end -------------------------------------------------------


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage tag."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


@dataclass
class SynthesisResult:
    """Everything produced on the way to the final term."""

    normalized: NormalizedWitness
    trace: DecompositionTrace
    q: PartialFn
    k_tables: dict
    h_family: dict
    q_table: PartialFn
    q_term: Term
    term: Term
    pstar_index: PStarIndex


def end_to_end_synthesize(g: PartialFn, f: PartialFn, theta: int, horizon: int,
                          unary_candidates: Sequence[PartialFn] = (),
                          width_threshold: int = 1) -> SynthesisResult:
    """Full pipeline: unary reduction, normalization, hereditary
    decomposition, helper/selector construction, and term assembly.

    The returned term evaluates to g on every tuple of dom(g).
    """
    def run(stage, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except StageError:
            raise
        except Exception as exc:  # noqa: BLE001 - retagged with the stage
            raise StageError(stage, exc) from exc

    if len(f.arity) > 1:
        f_unary = run("reduce-to-unary", reduce_to_unary, f,
                      unary_candidates, width_threshold)
    else:
        f_unary = f
    nw = run("normalize", normalize_f, f_unary, horizon)
    trace = run("decompose", hereditary_decompose, g, theta)
    q = trace.g_prime
    ps = pstar(full_index(len(g.arity)))
    tables = run("k-tables", fiber_k_tables, q, theta)
    h_family = run("helpers", build_h_family, q, ps, tables)
    q_table = run("selector", build_Q, q, h_family, nw, ps)
    q_term = run("assemble", assemble_term, q, nw, h_family, q_table, ps)

    # Pre-compose the decomposition's inner map: replace each projection
    # leaf by the corresponding certified inner-map component.
    env = dict(q_term.env)
    replacements = {}
    for i in sorted(g.arity):
        name = f"inner[{i}]"
        env[name] = AtomBinding(trace.h_composed.component(i), CI_ATOM)
        replacements[i] = App(name, tuple(Proj(j) for j in sorted(g.arity)))
    root = substitute(q_term.root, replacements)
    term = Term(root=root, env=env, arity=g.arity)
    return SynthesisResult(
        normalized=nw, trace=trace, q=q, k_tables=tables,
        h_family=h_family, q_table=q_table, q_term=q_term, term=term,
        pstar_index=ps,
    )
