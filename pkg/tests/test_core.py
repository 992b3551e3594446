import pytest

from clonecover.core import (
    App,
    AtomBinding,
    CI_ATOM,
    IndexMismatchError,
    MTuple,
    ORIGIN,
    OverlapError,
    PartialFn,
    Point,
    Proj,
    Term,
    bar_extend,
    compose,
    disjoint_union,
    eval_partial,
    eval_term,
    fiber,
    full_index,
    hash_fn,
    idx,
    shrink_inner,
    star_fn,
    star_set,
)

from conftest import pt, tup, unary


class TestEvalPartial:
    def test_lookup_of_sole_entry(self):
        p = unary({(0, 0): (5, 7)})
        assert eval_partial(p, tup((0, 0))) == pt(5, 7)

    def test_outside_domain_is_undefined(self):
        p = unary({(0, 0): (5, 7)})
        assert eval_partial(p, tup((1, 1))) is None

    def test_identity_case(self):
        p = unary({(2, 3): (2, 3)})
        assert eval_partial(p, tup((2, 3))) == pt(2, 3)

    def test_index_mismatch_is_an_error(self):
        p = unary({(0, 0): (5, 7)})
        with pytest.raises(IndexMismatchError):
            eval_partial(p, tup((0, 0), (1, 1)))


class TestCompose:
    def test_single_link_chain(self):
        u, v, w = tup((1, 1)), tup((2, 2)), pt(3, 3)
        inner = PartialFn(full_index(1), {u: v}, full_index(1))
        outer = PartialFn(full_index(1), {v: w})
        assert compose(outer, inner) == PartialFn(full_index(1), {u: w})

    def test_domain_restriction(self):
        u, v = tup((1, 1)), tup((9, 9))
        inner = PartialFn(full_index(1), {u: v}, full_index(1))
        outer = PartialFn(full_index(1), {tup((2, 2)): pt(0, 0)})
        assert len(compose(outer, inner)) == 0

    def test_identity_case(self):
        p = unary({(0, 1): (2, 3), (4, 5): (6, 7)})
        ident = PartialFn.identity_on(p.domain(), p.arity)
        assert compose(p, ident) == p

    def test_point_valued_inner_rejected(self):
        p = unary({(0, 0): (1, 1)})
        with pytest.raises(IndexMismatchError):
            compose(p, p)


class TestDisjointUnion:
    def test_two_entries(self):
        a = unary({(0, 0): (1, 1)})
        b = unary({(2, 2): (3, 3)})
        assert len(disjoint_union([a, b])) == 2

    def test_collision_is_an_error(self):
        a = unary({(0, 0): (1, 1)})
        with pytest.raises(OverlapError, match=r"\(0\|0\)"):
            disjoint_union([a, a])

    def test_empty_part_is_identity(self):
        p = unary({(0, 0): (1, 1)})
        empty = PartialFn.empty(p.arity)
        assert disjoint_union([empty, p]) == p


class TestShrinkInner:
    def test_already_exact(self):
        u, v, w = tup((1, 1)), tup((2, 2)), pt(3, 3)
        h_prime = PartialFn(full_index(1), {u: v}, full_index(1))
        g_prime = PartialFn(full_index(1), {v: w})
        g = compose(g_prime, h_prime)
        assert shrink_inner(g, g_prime, h_prime) == h_prime

    def test_strictly_smaller_domain(self):
        u1, u2, v, w = tup((1, 1)), tup((4, 4)), tup((2, 2)), pt(3, 3)
        h_prime = PartialFn(full_index(1), {u1: v, u2: v}, full_index(1))
        g_prime = PartialFn(full_index(1), {v: w})
        g = PartialFn(full_index(1), {u1: w})
        h = shrink_inner(g, g_prime, h_prime)
        assert len(h) == len(g) == 1
        assert compose(g_prime, h) == g

    def test_contract_violation(self):
        u, v = tup((1, 1)), tup((2, 2))
        h_prime = PartialFn(full_index(1), {u: v}, full_index(1))
        g_prime = PartialFn(full_index(1), {v: pt(3, 3)})
        g = PartialFn(full_index(1), {u: pt(9, 9)})
        with pytest.raises(ValueError, match="not contained"):
            shrink_inner(g, g_prime, h_prime)


class TestBarExtend:
    def test_empty_function_gets_origin(self):
        p = PartialFn.empty(full_index(1))
        u = tup((3, 4))
        assert bar_extend(p, [u]).graph == {u: ORIGIN}

    def test_total_function_unchanged(self):
        p = unary({(1, 2): (3, 4)})
        assert bar_extend(p, p.domain()) == p

    def test_one_missing_tuple(self):
        p = unary({(1, 2): (3, 4)})
        extended = bar_extend(p, [tup((1, 2)), tup((5, 6))])
        assert len(extended) == 2
        assert extended.graph[tup((5, 6))] == ORIGIN

    def test_domain_outside_universe(self):
        p = unary({(1, 2): (3, 4)})
        with pytest.raises(ValueError):
            bar_extend(p, [tup((9, 9))])


class TestStarOperators:
    def test_star_set_with_empty_prefix(self):
        a = {tup((1, 2)), tup((3, 4))}
        assert star_set(MTuple.empty(), a) == frozenset(a)

    def test_star_set_is_bijective(self):
        c = MTuple.of({1: pt(0, 0)})
        a = {MTuple.of({2: pt(i, i)}) for i in range(5)}
        assert len(star_set(c, a)) == 5

    def test_star_set_definition(self):
        c = MTuple.of({1: pt(0, 0)})
        z = MTuple.of({2: pt(3, 4)})
        assert star_set(c, {z}) == {MTuple.of({1: pt(0, 0), 2: pt(3, 4)})}

    def test_star_fn_with_empty_prefix(self):
        g = unary({(1, 1): (2, 2)})
        assert star_fn(MTuple.empty(), g) == g

    def test_star_fn_defining_identity(self):
        c = MTuple.of({1: pt(0, 5)})
        g = PartialFn(idx(2), {MTuple.of({2: pt(3, 4)}): pt(7, 8)})
        starred = star_fn(c, g)
        for z, v in g.graph.items():
            assert starred.graph[c.union(z)] == v

    def test_star_then_fiber_recovers(self):
        c = MTuple.of({1: pt(0, 5)})
        g = PartialFn(idx(2), {MTuple.of({2: pt(i, i)}): pt(i, 0)
                               for i in range(4)})
        assert fiber(star_fn(c, g), idx(1), c) == g

    def test_overlapping_index_sets_rejected(self):
        c = MTuple.of({1: pt(0, 0)})
        g = PartialFn(idx(1), {MTuple.of({1: pt(1, 1)}): pt(2, 2)})
        with pytest.raises(OverlapError):
            star_fn(c, g)


class TestHashFn:
    def test_identity_maps_to_identity(self):
        c = MTuple.of({1: pt(0, 5)})
        a = {MTuple.of({2: pt(i, i)}) for i in range(3)}
        g = PartialFn.identity_on(a, idx(2))
        hashed = hash_fn(c, g)
        assert hashed == PartialFn.identity_on(star_set(c, a), idx(1, 2))

    def test_fixed_block_preserved(self):
        c = MTuple.of({1: pt(9, 9)})
        g = PartialFn(idx(2), {MTuple.of({2: pt(0, 0)}): MTuple.of({2: pt(1, 1)})},
                      idx(2))
        hashed = hash_fn(c, g)
        for u, v in hashed.graph.items():
            assert u.restrict(idx(1)) == c and v.restrict(idx(1)) == c

    def test_star_of_composition(self):
        # c*(f o g) = (c*f) o (c#g)
        c = MTuple.of({1: pt(2, 3)})
        z1, z2 = MTuple.of({2: pt(0, 0)}), MTuple.of({2: pt(1, 1)})
        g = PartialFn(idx(2), {z1: z2}, idx(2))
        f = PartialFn(idx(2), {z2: pt(5, 5)})
        assert star_fn(c, compose(f, g)) == compose(star_fn(c, f), hash_fn(c, g))


class TestFiber:
    def test_empty_subset_gives_g_itself(self):
        g = unary({(1, 1): (2, 2)})
        assert fiber(g, frozenset(), MTuple.empty()) == g

    def test_unmatched_prefix_gives_empty(self):
        g = PartialFn(idx(1, 2), {tup((0, 0), (1, 1)): pt(2, 2)})
        c = MTuple.of({1: pt(9, 9)})
        assert len(fiber(g, idx(1), c)) == 0

    def test_reconstruction(self):
        g = PartialFn(idx(1, 2), {
            tup((0, 0), (1, 1)): pt(2, 2),
            tup((0, 0), (3, 3)): pt(4, 4),
            tup((5, 5), (1, 1)): pt(6, 6),
        })
        parts = [
            star_fn(c, fiber(g, idx(1), c))
            for c in {u.restrict(idx(1)) for u in g.domain()}
        ]
        assert disjoint_union(parts) == g

    def test_subset_check(self):
        g = unary({(1, 1): (2, 2)})
        with pytest.raises(IndexMismatchError):
            fiber(g, idx(7), MTuple.of({7: pt(0, 0)}))


class TestTerms:
    def test_projection_law(self):
        t = Term(Proj(1), {}, idx(1, 2))
        assert eval_term(t, tup((3, 4), (5, 6))) == pt(3, 4)

    def test_atom_evaluation(self):
        p = unary({(0, 0): (7, 7)})
        t = Term(App("p", (Proj(1),)), {"p": AtomBinding(p, CI_ATOM)}, idx(1))
        assert eval_term(t, tup((0, 0))) == pt(7, 7)
        assert eval_term(t, tup((1, 1))) is None

    def test_compose_agrees_with_partial_composition(self, rng):
        from conftest import random_point_fn, random_tuple_fn, random_tuple
        for _ in range(50):
            inner = random_tuple_fn(rng, idx(1), idx(1))
            outer = random_point_fn(rng, idx(1))
            composed = compose(outer, inner)
            t = Term(
                App("outer", (App("inner", (Proj(1),)),)),
                {"outer": AtomBinding(outer, CI_ATOM),
                 "inner": AtomBinding(inner.component(1), CI_ATOM)},
                idx(1),
            )
            for u in inner.domain() | {random_tuple(rng, idx(1))}:
                assert eval_term(t, u) == composed.graph.get(u)

    def test_unresolved_atom(self):
        from clonecover.core import UnresolvedAtomError
        t = Term(App("ghost", (Proj(1),)), {}, idx(1))
        with pytest.raises(UnresolvedAtomError):
            eval_term(t, tup((0, 0)))

    def test_term_statistics(self):
        p = unary({(0, 0): (7, 7)})
        t = Term(App("p", (Proj(1),)), {"p": AtomBinding(p, CI_ATOM)}, idx(1))
        assert t.size() == 2 and t.depth() == 2
        assert t.atom_counts() == {"p": 1}


class TestMTuple:
    def test_union_disjoint(self):
        a = MTuple.of({1: pt(0, 0)})
        b = MTuple.of({2: pt(1, 1)})
        assert a.union(b).indices == idx(1, 2)

    def test_union_overlap_rejected(self):
        a = MTuple.of({1: pt(0, 0)})
        with pytest.raises(OverlapError):
            a.union(a)

    def test_restrict_and_without_partition(self):
        u = tup((0, 0), (1, 1), (2, 2))
        s = idx(1, 3)
        assert u.restrict(s).union(u.without(s)) == u
