"""Deterministic instance generation with planted admissibility.

An instance packages a target function g, a witness f, and the horizon /
threshold parameters.  The generator plants every structure the pipeline's
choice steps rely on: a scrambled normalized witness (with strictly
increasing row labels so the deterministic recovery is consistent), and
wasteful features whose preimages carry fresh low-coordinate candidate
tuples with a configurable surplus.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import MTuple, PartialFn, Point, compose, full_index
from .decompose import AdmissibilityError, hereditary_decompose
from .synth import normalize_f, oplus, reduce_to_unary

PROFILES = ("mixed", "all-thrifty", "mary-witness")

CANDIDATE_SURPLUS = 2  # fresh low tuples planted per wasteful value


@dataclass
class Instance:
    """A full problem: graphs, parameters, and planted-structure metadata."""

    m: int
    horizon: int
    theta: int
    seed: int
    ceiling: int
    profile: str
    g: PartialFn
    f: PartialFn
    candidates: tuple  # unary helpers for the arity reduction; may be empty
    metadata: dict

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            (self.m, self.horizon, self.theta, self.seed, self.ceiling,
             self.profile, self.g, self.f, tuple(self.candidates),
             self.metadata)
            == (other.m, other.horizon, other.theta, other.seed,
                other.ceiling, other.profile, other.g, other.f,
                tuple(other.candidates), other.metadata)
        )


class ProfileError(ValueError):
    """The requested profile cannot be satisfied with these parameters."""


def default_theta(horizon: int) -> int:
    return (horizon + 1) // 2


def generate_instance(m: int, horizon: int, theta: int, seed: int,
                      profile: str = "mixed") -> Instance:
    """Build a deterministic admissible instance.

    Raises ProfileError when the parameters cannot support the profile
    (e.g. too few low y-coordinates for the planted wasteful features).
    """
    if m not in (1, 2, 3):
        raise ProfileError(f"unsupported arity {m}; profiles exist for 1..3")
    if horizon < 3:
        raise ProfileError("horizon must be at least 3")
    if not 1 <= theta <= horizon - 1:
        raise ProfileError("theta must lie in [1, horizon - 1]")
    if profile not in PROFILES:
        raise ProfileError(f"unknown profile {profile!r}")

    rng = random.Random(seed)
    ceiling = horizon * horizon + horizon
    last_error = None
    for _ in range(20):
        try:
            return _build(m, horizon, theta, seed, ceiling, profile, rng)
        except _RetryGeneration as exc:
            last_error = exc
    raise ProfileError(f"generation failed to converge: {last_error}")


class _RetryGeneration(Exception):
    pass


def _build(m, horizon, theta, seed, ceiling, profile, rng) -> Instance:
    f, candidates, witness_meta = _build_witness(m, horizon, ceiling, profile, rng)
    g, feature_meta = _build_target(m, horizon, theta, ceiling, profile, rng)
    metadata = {
        "witness": witness_meta,
        "features": feature_meta,
        "candidate_surplus": CANDIDATE_SURPLUS,
    }
    inst = Instance(
        m=m, horizon=horizon, theta=theta, seed=seed, ceiling=ceiling,
        profile=profile, g=g, f=f, candidates=candidates, metadata=metadata,
    )
    report = check_admissibility(inst)
    if not report["passed"]:
        raise _RetryGeneration(report["detail"])
    return inst


def _build_witness(m, horizon, ceiling, profile, rng):
    n_lines = horizon - 1
    lines = rng.sample(range(ceiling), n_lines)
    rows = sorted(rng.sample(range(ceiling), n_lines))
    codes = sorted(oplus(n, k) for n in range(1, horizon) for k in range(n))
    labels = rng.sample(range(ceiling), len(codes))
    domain_label = dict(zip(codes, labels))

    graph = {}
    for n in range(1, horizon):
        for k in range(n):
            u = MTuple.of({1: Point(0, domain_label[oplus(n, k)])})
            graph[u] = Point(rows[k], lines[n - 1])
    unary = PartialFn(full_index(1), graph)

    meta = {
        "lines": [[n, lines[n - 1]] for n in range(1, horizon)],
        "rows": rows,
        "domain_labels": [[c, l] for c, l in sorted(domain_label.items())],
        "arity": 1,
    }
    if profile != "mary-witness":
        return unary, (), meta

    # Plant a binary witness recoverable through (identity, constant-anchor).
    anchor = sorted(unary.domain())[0]
    anchor_pt = anchor.points()[0]
    two = full_index(2)
    binary = PartialFn(two, {
        MTuple.of({1: u.points()[0], 2: anchor_pt}): v
        for u, v in unary.graph.items()
    })
    support = sorted({u.points()[0] for u in unary.domain()} | {anchor_pt})
    ident = PartialFn(full_index(1), {
        MTuple.of({1: p}): p for p in support
    })
    const = PartialFn(full_index(1), {
        MTuple.of({1: p}): anchor_pt for p in support
    })
    meta["arity"] = 2
    meta["anchor"] = [anchor_pt.x, anchor_pt.y]
    return binary, (ident, const), meta


def _feature_plan(m: int, theta: int, profile: str) -> list:
    """Subsets S to plant wasteful features for, within the low-y budget.

    Each feature consumes CANDIDATE_SURPLUS * |T| low y-coordinates; features
    are added in sweep order while the budget of theta lows lasts.
    """
    if profile == "all-thrifty":
        return []
    budget = theta
    plan = []
    # S = M would give 0-ary fibers, which cannot be wasteful; skip it.
    options = [frozenset()] + ([frozenset({i}) for i in range(1, m + 1)]
                               if m > 1 else [])
    for s in options:
        cost = CANDIDATE_SURPLUS * (m - len(s))
        if cost <= budget:
            plan.append(s)
            budget -= cost
    if not plan:
        raise ProfileError(
            f"theta={theta} leaves no room for wasteful features at m={m}"
        )
    return plan


def _build_target(m, horizon, theta, ceiling, profile, rng):
    arity = full_index(m)
    used_tuples: set = set()
    used_values: set = set()
    graph: dict = {}

    def fresh_value() -> Point:
        for _ in range(50):
            v = Point(rng.randrange(ceiling), rng.randrange(ceiling))
            if v not in used_values:
                used_values.add(v)
                return v
        raise _RetryGeneration("value space exhausted")

    def add_entry(u: MTuple, v: Point):
        if u in used_tuples:
            raise _RetryGeneration("duplicate domain tuple")
        used_tuples.add(u)
        graph[u] = v

    plan = _feature_plan(m, theta, profile)
    low_pool = list(range(theta))
    rng.shuffle(low_pool)
    feature_meta = []
    for s in plan:
        t = sorted(arity - s)
        value = fresh_value()
        # fixed low block shared by the whole feature (the fiber key part)
        c_part = {i: Point(rng.randrange(ceiling), rng.randrange(theta))
                  for i in sorted(s)}
        # wasters: remaining components all high, so the fiber preimage's
        # bound exceeds theta and the value gets re-routed at this stage
        wasters = []
        for _ in range(rng.randint(1, 2)):
            entries = dict(c_part)
            for i in t:
                entries[i] = Point(rng.randrange(ceiling),
                                   rng.randrange(theta, ceiling))
            wasters.append(MTuple.of(entries))
        # candidates: remaining components from a private block of fresh lows
        cands = []
        for _ in range(CANDIDATE_SURPLUS):
            if len(low_pool) < len(t):
                raise ProfileError("low-coordinate budget exhausted")
            block = [low_pool.pop() for _ in t]
            entries = dict(c_part)
            for i, y in zip(t, block):
                entries[i] = Point(rng.randrange(ceiling), y)
            cands.append(MTuple.of(entries))
        for u in wasters + cands:
            add_entry(u, value)
        feature_meta.append({
            "subset": sorted(s),
            "value": [value.x, value.y],
            "wasters": [_tuple_json(u) for u in wasters],
            "candidates": [_tuple_json(u) for u in cands],
        })

    n_bulk = rng.randint(4 * m, 12 * m)
    bulk_values: list = []
    for _ in range(n_bulk):
        for _ in range(50):
            u = MTuple.of({
                i: Point(rng.randrange(ceiling), rng.randrange(theta))
                for i in sorted(arity)
            })
            if u not in used_tuples:
                break
        else:
            raise _RetryGeneration("bulk tuple space exhausted")
        if bulk_values and rng.random() < 0.3:
            # reuse a thrifty value to get multi-tuple preimages
            v = rng.choice(bulk_values)
        else:
            v = fresh_value()
            bulk_values.append(v)
        add_entry(u, v)

    return PartialFn(arity, graph), feature_meta


def _tuple_json(u: MTuple) -> list:
    return [[i, [p.x, p.y]] for i, p in u.items()]


def check_admissibility(inst: Instance) -> dict:
    """Re-verify that every choice step of the pipeline can succeed.

    Structural checks on coordinates, then dry runs of the witness recovery
    and the hereditary decomposition (the two stages with choice steps).
    """
    checks = []

    def check(name, ok, detail=""):
        checks.append({"name": name, "passed": bool(ok), "detail": detail})

    coords_ok = all(
        0 <= p.x < inst.ceiling and 0 <= p.y < inst.ceiling
        for u, v in list(inst.g.graph.items()) + list(inst.f.graph.items())
        for p in list(u.points()) + [v]
    )
    check("coordinates below ceiling", coords_ok)
    check("theta below horizon", 1 <= inst.theta <= inst.horizon - 1)

    try:
        f_unary = inst.f
        if len(inst.f.arity) > 1:
            f_unary = reduce_to_unary(inst.f, inst.candidates)
        normalize_f(f_unary, inst.horizon)
        check("witness recoverable", True)
    except (AdmissibilityError, ValueError) as exc:
        check("witness recoverable", False, str(exc))

    try:
        trace = hereditary_decompose(inst.g, inst.theta)
        check("decomposition admissible",
              compose(trace.g_prime, trace.h_composed) == inst.g)
    except AdmissibilityError as exc:
        check("decomposition admissible", False, str(exc))

    passed = all(c["passed"] for c in checks)
    detail = "; ".join(c["name"] + ": " + c["detail"]
                       for c in checks if not c["passed"])
    return {"passed": passed, "checks": checks, "detail": detail}
