"""Acceptance gate: the eight headline guarantees, one test each.

Each test prints a single "criterion N: PASS/FAIL" line outside pytest's
capture so the gate is readable straight from the run log.  The instance
corpus (100 instances per arity, profiles cycled) is synthesized once and
shared across the criteria that quantify over "every generated instance".
"""
import itertools
import random
import time
from collections import Counter

import pytest

from clonecover.analysis import least_bound, width
from clonecover.core import (
    MTuple,
    PartialFn,
    Point,
    compose,
    disjoint_union,
    eval_term,
    fiber,
    fiber_keys,
    hash_fn,
    idx,
    shrink_inner,
    star_fn,
)
from clonecover.decompose import verify_decomposition
from clonecover.instances import PROFILES, generate_instance
from clonecover.pipeline import derive_factor_rng, random_width1_factors
from clonecover.serialize import instance_dumps, report_dumps, term_dumps
from clonecover.synth import (
    end_to_end_synthesize,
    main_lemma_certify,
    math_factorial,
    normalize_f,
    oplus,
    verify_main_lemma,
    witness_point,
)
from clonecover.pipeline import run_pipeline

from conftest import random_point_fn, random_tuple, random_tuple_fn

INSTANCES_PER_M = 100


def _report(capsys, number: int, passed: bool, detail: str):
    with capsys.disabled():
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
    assert passed, f"criterion {number}: {detail}"


def _corpus_params(seed):
    horizon = 12 if seed % 10 == 0 else 8
    return horizon, horizon // 2, PROFILES[seed % len(PROFILES)]


@pytest.fixture(scope="module")
def corpus():
    """100 synthesized instances per arity, with wall-clock timing."""
    out = {}
    t0 = time.perf_counter()
    for m in (1, 2, 3):
        runs = []
        for seed in range(INSTANCES_PER_M):
            horizon, theta, profile = _corpus_params(seed)
            inst = generate_instance(m, horizon, theta, seed, profile)
            result = end_to_end_synthesize(
                inst.g, inst.f, inst.theta, inst.horizon,
                unary_candidates=inst.candidates,
            )
            runs.append((inst, result))
        out[m] = runs
    out["elapsed"] = time.perf_counter() - t0
    return out


def test_criterion_1_end_to_end_synthesis(corpus, capsys):
    mismatches = 0
    checked = 0
    oversized = 0
    for m in (1, 2, 3):
        for inst, result in corpus[m]:
            if len(inst.g) > 300:
                oversized += 1
            for u in inst.g.domain():
                checked += 1
                if eval_term(result.term, u) != inst.g.graph[u]:
                    mismatches += 1
    elapsed = corpus["elapsed"]
    passed = mismatches == 0 and oversized == 0 and elapsed < 60.0
    _report(capsys, 1, passed,
            f"{3 * INSTANCES_PER_M} instances, {checked} tuples, "
            f"{mismatches} mismatches, synthesis in {elapsed:.1f}s")


def test_criterion_2_selector_width_bound(corpus, capsys):
    families_per_m = 50
    violations = 0
    uniq_failures = 0
    families = 0
    for m in (1, 2, 3):
        inst, result = corpus[m][0]
        rng = derive_factor_rng(inst.seed + 1)
        lines = sorted({v.y for v in result.q_table.graph.values()})
        perms = list(itertools.permutations(range(1, m + 1)))
        for _ in range(families_per_m):
            factors = random_width1_factors(
                result.q_table, m, rng, inst.ceiling)
            families += 1
            rep = verify_main_lemma(result.q_table, factors, m)
            if rep.observed_width > math_factorial(m):
                violations += 1
            for n in lines:
                for perm in perms:
                    cert = main_lemma_certify(
                        result.q_table, result.k_tables, factors, m, n, perm)
                    if not cert.passed:
                        uniq_failures += 1
    passed = violations == 0 and uniq_failures == 0
    _report(capsys, 2, passed,
            f"{families} width-1 families, {violations} width violations, "
            f"{uniq_failures} uniqueness failures")


def test_criterion_3_normalization(capsys):
    horizon = 16
    bad_seeds = []
    for seed in range(50):
        inst = generate_instance(1, horizon, horizon // 2, seed)
        nw = normalize_f(inst.f, horizon)
        ok = all(
            witness_point(nw, Point(0, oplus(n, k))) == Point(k, n)
            for n in range(1, horizon) for k in range(n)
        )
        if not ok:
            bad_seeds.append(seed)
    codes = {}
    collisions = 0
    for n in range(1, 1001):
        for k in range(n):
            code = oplus(n, k)
            if code in codes:
                collisions += 1
            codes[code] = (n, k)
    passed = not bad_seeds and collisions == 0
    _report(capsys, 3, passed,
            f"50 seeds at N={horizon}, bad seeds {bad_seeds}, "
            f"{collisions} code collisions up to n=1000")


def test_criterion_4_decomposition_contract(corpus, capsys):
    failures = []
    for m in (1, 2, 3):
        for inst, result in corpus[m]:
            verdict = verify_decomposition(inst.g, result.trace)
            if not verdict["passed"]:
                bad = [c["name"] for c in verdict["checks"] if not c["passed"]]
                failures.append((m, inst.seed, bad))
    _report(capsys, 4, not failures,
            f"{3 * INSTANCES_PER_M} traces verified, failures: {failures}")


def test_criterion_5_algebra_laws(capsys):
    rng = random.Random(0xA15EB)
    s, t = idx(1), idx(2)
    failures = 0
    cases = 0

    def law(ok):
        nonlocal cases, failures
        cases += 1
        if not ok:
            failures += 1

    for _ in range(250):
        c = MTuple.of({1: Point(rng.randrange(20), rng.randrange(20))})
        g = random_tuple_fn(rng, t, t)
        f = random_point_fn(rng, t)
        # composition through the prefix operators
        law(star_fn(c, compose(f, g))
            == compose(star_fn(c, f), hash_fn(c, g)))
        # fibering a prefixed function recovers it
        law(fiber(star_fn(c, f), s, c) == f)

    for _ in range(250):
        q = random_point_fn(rng, idx(1, 2), size=rng.randint(1, 12))
        # reconstruction from fibers
        parts = [star_fn(c, fiber(q, s, c)) for c in fiber_keys(q, s)]
        law(disjoint_union(parts) == q)

    for _ in range(250):
        inner = random_tuple_fn(rng, t, t, size=rng.randint(1, 10))
        outer = random_point_fn(rng, t, size=rng.randint(1, 10))
        pieces_in = [dict() for _ in range(3)]
        pieces_out = [dict() for _ in range(3)]
        for u, v in inner.graph.items():
            pieces_in[rng.randrange(3)][u] = v
        for u, v in outer.graph.items():
            pieces_out[rng.randrange(3)][u] = v
        gs = [PartialFn(t, gr, t) for gr in pieces_in]
        fs = [PartialFn(t, gr) for gr in pieces_out]
        # union of pieced compositions sits inside the composed unions
        left = disjoint_union([compose(fo, gi) for fo, gi in zip(fs, gs)])
        law(left.is_subfunction_of(compose(outer, inner)))

    for _ in range(250):
        h_prime = random_tuple_fn(rng, t, t, size=rng.randint(1, 10))
        g_prime = random_point_fn(rng, t, size=rng.randint(1, 10))
        full = compose(g_prime, h_prime)
        sub = full.restrict(
            [u for u in sorted(full.domain()) if rng.random() < 0.6])
        h = shrink_inner(sub, g_prime, h_prime)
        law(h.is_subfunction_of(h_prime) and compose(g_prime, h) == sub)

    for _ in range(250):
        a = {random_tuple(rng, t) for _ in range(rng.randint(0, 8))}
        b = {random_tuple(rng, t) for _ in range(rng.randint(0, 8))} - a
        # bound of a disjoint union is the max of the bounds
        law(least_bound(a | b).k == max(least_bound(a).k, least_bound(b).k))

    passed = failures == 0 and cases >= 1000
    _report(capsys, 5, passed, f"{cases} law cases, {failures} failures")


def _naive_width(points):
    counts = Counter(p.y for p in set(points))
    return max(counts.values(), default=0)


def _naive_least_bound(tuples):
    tuples = list(tuples)
    if not tuples or not tuples[0].indices:
        return 0
    k = 0
    while not all(any(p.y < k for p in u.points()) for u in tuples):
        k += 1
    return k


def _naive_k_table(t):
    by_line = {}
    for u, v in t.graph.items():
        by_line.setdefault(v.y, []).append(u)
    return {n: _naive_least_bound(us) for n, us in by_line.items()}


def test_criterion_6_oracle_equivalence(capsys):
    from clonecover.analysis import k_table

    rng = random.Random(0x0AC1E)
    disagreements = 0
    sets_checked = 0
    for i in range(1000):
        size = rng.randint(1000, 10000) if i % 100 == 0 else rng.randint(0, 60)
        span = 10000
        points = [Point(rng.randrange(span), rng.randrange(span))
                  for _ in range(size)]
        sets_checked += 1
        if width(points).width != _naive_width(points):
            disagreements += 1
        arity = idx(*range(1, rng.randint(1, 3) + 1))
        tuples = [random_tuple(rng, arity, span)
                  for _ in range(min(size, 40))]
        if least_bound(tuples).k != _naive_least_bound(tuples):
            disagreements += 1
        fn = random_point_fn(rng, idx(1), size=rng.randint(1, 20), span=8)
        theta = 8  # every y is below 8, so fn is thrifty by construction
        if k_table(fn, theta) != _naive_k_table(fn):
            disagreements += 1
    _report(capsys, 6, disagreements == 0,
            f"{sets_checked} random sets, {disagreements} disagreements")


def test_criterion_7_helper_certificates(corpus, capsys):
    bad = []
    helpers = 0
    for m in (1, 2, 3):
        for inst, result in corpus[m]:
            for (s, j), h in result.h_family.items():
                helpers += 1
                ran = set(h.graph.values())
                if any(p.x != 0 for p in ran) or width(ran).width > 1:
                    bad.append((m, inst.seed, sorted(s), j))
    _report(capsys, 7, not bad,
            f"{helpers} helper maps checked, violations: {bad}")


def test_criterion_8_determinism(capsys):
    diffs = []
    for m in (1, 2):
        for seed in (0, 1, 2):
            a = generate_instance(m, 8, 4, seed)
            b = generate_instance(m, 8, 4, seed)
            if instance_dumps(a) != instance_dumps(b):
                diffs.append((m, seed, "instance"))
            rep_a, res_a = run_pipeline(a)
            rep_b, res_b = run_pipeline(b)
            if term_dumps(res_a.term) != term_dumps(res_b.term):
                diffs.append((m, seed, "term"))
            if report_dumps(rep_a) != report_dumps(rep_b):
                diffs.append((m, seed, "report"))
    _report(capsys, 8, not diffs,
            f"6 seed pairs, byte diffs: {diffs}")
