"""Width, bound, and thriftiness analysis of finite fragments.

The paper-facing notions "unbounded" and "ideal membership" have no finite
witnesses; everything here is parameterized by a threshold theta (for the
thrifty/wasteful cut) or by an explicit claimed bound (for the ideal checks),
and every verdict is packaged with the data needed to re-check it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Tuple

from .core import (
    IndexMismatchError,
    IndexSet,
    MTuple,
    PartialFn,
    Point,
    fiber,
    fiber_keys,
)

THRIFTY = "thrifty"
WASTEFUL = "wasteful"


@dataclass(frozen=True)
class WidthCertificate:
    """Maximal per-line point count of a finite point set."""

    width: int
    witness_line: Optional[int]  # a line attaining the width; None when empty
    per_line_counts: tuple  # sorted (line, count) pairs


def width(points: Iterable[Point]) -> WidthCertificate:
    counts: dict = {}
    for p in {Point(*p) for p in points}:
        counts[p.y] = counts.get(p.y, 0) + 1
    if not counts:
        return WidthCertificate(0, None, ())
    w = max(counts.values())
    witness = min(n for n, c in counts.items() if c == w)
    return WidthCertificate(w, witness, tuple(sorted(counts.items())))


def tuple_set_width(tuples: Iterable[MTuple]) -> int:
    """Max width over the component projections of a set of M-tuples."""
    tuples = list(tuples)
    if not tuples:
        return 0
    arity = tuples[0].indices
    for u in tuples:
        if u.indices != arity:
            raise IndexMismatchError("mixed index sets in tuple set")
    return max(width({u[i] for u in tuples}).width for i in sorted(arity))


@dataclass(frozen=True)
class BoundCertificate:
    """Least k such that every tuple has some component with y < k."""

    k: int


def least_bound(tuples: Iterable[MTuple]) -> BoundCertificate:
    tuples = list(tuples)
    if not tuples:
        return BoundCertificate(0)
    arity = tuples[0].indices
    for u in tuples:
        if u.indices != arity:
            raise IndexMismatchError("mixed index sets in tuple set")
    if not arity:
        # 0-ary tuples carry no coordinates; treat them as trivially bounded.
        return BoundCertificate(0)
    return BoundCertificate(1 + max(u.min_y() for u in tuples))


@dataclass
class ThriftyReport:
    """Per-value preimage bounds of a partial function against a threshold."""

    theta: int
    per_value: dict  # value -> (bound k, verdict)
    thrifty_domain: frozenset = frozenset()
    wasteful_domain: frozenset = frozenset()
    hereditary: Optional[dict] = None  # (S, c) -> ThriftyReport
    failure: Optional[tuple] = None  # (S, c, value) on hereditary failure

    @property
    def all_thrifty(self) -> bool:
        if any(v == WASTEFUL for _, v in self.per_value.values()):
            return False
        if self.hereditary is not None:
            return self.failure is None
        return True


def classify_preimages(p: PartialFn, theta: int) -> ThriftyReport:
    """Split dom(p) into the thrifty and wasteful value-preimages.

    A value is wasteful at theta when its preimage's least bound exceeds
    theta; the two domain parts partition dom(p).
    """
    if theta < 1:
        raise ValueError("theta must be at least 1")
    preimages: dict = {}
    for u, v in p.graph.items():
        preimages.setdefault(v, []).append(u)
    per_value = {}
    thrifty_dom: set = set()
    wasteful_dom: set = set()
    for v, us in preimages.items():
        k = least_bound(us).k
        if k <= theta:
            per_value[v] = (k, THRIFTY)
            thrifty_dom.update(us)
        else:
            per_value[v] = (k, WASTEFUL)
            wasteful_dom.update(us)
    return ThriftyReport(
        theta=theta,
        per_value=per_value,
        thrifty_domain=frozenset(thrifty_dom),
        wasteful_domain=frozenset(wasteful_dom),
    )


class NotThriftyError(ValueError):
    """Raised when an operation requires a thrifty function but got none."""

    def __init__(self, value, bound: int, theta: int):
        self.value = value
        self.bound = bound
        self.theta = theta
        super().__init__(
            f"function is not thrifty at theta={theta}: value {value!r} has "
            f"preimage bound {bound}"
        )


def k_table(t: PartialFn, theta: int) -> dict:
    """Least bound of t's preimage of each line met by ran(t).

    Requires t thrifty at theta.  Per-line bounds may still exceed theta
    since a line unions several value-preimages; the exact value is reported.
    """
    if not t.is_point_valued():
        raise IndexMismatchError("k_table applies to point-valued functions")
    report = classify_preimages(t, theta)
    for v, (k, verdict) in sorted(report.per_value.items()):
        if verdict == WASTEFUL:
            raise NotThriftyError(v, k, theta)
    by_line: dict = {}
    for u, v in t.graph.items():
        by_line.setdefault(v.y, []).append(u)
    return {n: least_bound(us).k for n, us in sorted(by_line.items())}


def is_hereditarily_thrifty(q: PartialFn, theta: int) -> ThriftyReport:
    """Check thriftiness of every fiber of q, over all S and occurring c.

    The S = empty-set clause is plain thriftiness of q itself; the overall
    verdict is the conjunction, with the first failing (S, c, value) triple
    recorded.
    """
    m = sorted(q.arity)
    hereditary: dict = {}
    failure = None
    root = classify_preimages(q, theta)
    for s in _subsets(m):
        for c in fiber_keys(q, s):
            rep = classify_preimages(fiber(q, s, c), theta)
            hereditary[(s, c)] = rep
            if failure is None and not rep.all_thrifty:
                bad = min(
                    v for v, (_, verdict) in rep.per_value.items()
                    if verdict == WASTEFUL
                )
                failure = (s, c, bad)
    return ThriftyReport(
        theta=theta,
        per_value=root.per_value,
        thrifty_domain=root.thrifty_domain,
        wasteful_domain=root.wasteful_domain,
        hereditary=hereditary,
        failure=failure,
    )


def _subsets(members: Sequence[int]) -> list:
    """All subsets, by increasing cardinality then lexicographic."""
    subs = [[]]
    for x in members:
        subs += [s + [x] for s in subs]
    subs.sort(key=lambda s: (len(s), s))
    return [frozenset(s) for s in subs]


all_subsets = _subsets


@dataclass
class IdealVerdict:
    """Outcome of a fragment-level image-width check."""

    kind: str  # "CI-fragment" or "CJ-fragment"
    test_family: tuple
    image_widths: tuple
    bound_claimed: int
    passed: bool


def ci_fragment_check(p: PartialFn, test_sets: Sequence[Iterable[MTuple]],
                      bound: int) -> IdealVerdict:
    """Check that p maps each test set to a set of width <= bound."""
    family = tuple(frozenset(a) for a in test_sets)
    widths = []
    for a in family:
        outside = a - p.domain()
        if outside:
            raise ValueError(
                f"test set leaves dom(p), e.g. {sorted(outside)[0]!r}"
            )
        image = {p.graph[u] for u in a}
        widths.append(width(image).width)
    return IdealVerdict(
        kind="CI-fragment",
        test_family=family,
        image_widths=tuple(widths),
        bound_claimed=bound,
        passed=all(w <= bound for w in widths),
    )
