import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hoclosure import fta, stre
from hoclosure.trees import embeds, parse_tree

from helpers import STRE_LETTERS, product_sample, stre_corpus

EXAMPLE = "{a(b?(), #)}*.c?()"


def test_example_membership():
    e = stre.parse(EXAMPLE)
    for t in ["b", "c", "a(b,c)", "a(b,b)", "a(b,a(b,c))", "a(b,a(b,a(b,b)))"]:
        assert stre.member(parse_tree(t), e), t
    for t in ["a(c,b)", "a(b,a(c,c))", "d", "b(c)"]:
        assert not stre.member(parse_tree(t), e), t


def test_parser_spellings_agree():
    a = stre.parse("(a(b?(), #))*.c?()")
    b = stre.parse(EXAMPLE)
    assert stre.equivalent(a, b)
    assert stre.parse("0*.c?()") == stre.parse("{}*.c?()")
    assert stre.show(stre.parse("a?(0, c?())")) == "a?(0, c?())"


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_show_parse_round_trip(rng):
    e = stre.random_stre(rng, STRE_LETTERS, 3)
    assert stre.parse(stre.show(e)) == e


def test_denotation_is_downward_closed():
    rng = random.Random(5)
    from hoclosure.trees import downward_closure

    for e in stre_corpus(40, seed=11):
        members = stre.to_nfta(e).enumerate(5)
        for t in members[:15]:
            for u in downward_closure([t]):
                assert stre.member(u, e)


def test_formula_for_optional_letters():
    # a?(S1, S2) denotes a(T1, T2) together with S1 and S2 themselves
    e = stre.parse("a?(b?(c?()), d?())")
    assert stre.member(parse_tree("a(b(c),d)"), e)
    assert stre.member(parse_tree("b(c)"), e) and stre.member(parse_tree("d"), e)
    assert not stre.member(parse_tree("a(d,b(c))"), e)
    assert not stre.nonempty(stre.parse("a?(0, d?())"))


def test_single_steps_preserve_meaning():
    seen = set()
    for s in stre_corpus(60, seed=1):
        for rule, t in stre.steps(s):
            seen.add(rule)
            assert stre.equivalent(s, t), (rule, stre.show(s), stre.show(t))
    assert len(seen) >= 6


def test_normal_forms_are_irreducible_and_equivalent():
    for s in stre_corpus(60, seed=2):
        n = stre.normalize(s)
        assert stre.is_irreducible(n)
        assert stre.equivalent(s, n)


def test_pure_products_cover_the_sum():
    for s in stre_corpus(60, seed=3):
        ps = stre.pure_products(s)
        assert all(stre.is_pure(p) for p in ps)
        assert stre.equivalent(s, stre.Sum(tuple(ps)))


def test_specific_rules():
    # an iteration over a full context with empty body is empty
    assert stre.normalize(stre.parse("{a(#, #)}*.0")) == stre.Sum(())
    # a hole-free context moves into the body
    out = dict(stre.steps(stre.parse("{a(#, c?()) + b(d?())}*.c?()")))
    assert 7 in out
    # sums split under linear iterations
    out = dict(stre.steps(stre.parse("{b(#)}*.(c?() + d?())")))
    assert sorted(stre.show(stre.single(q)) for q in out[10].items) == ["{b(#)}*.c?()", "{b(#)}*.d?()"]


def test_versatile_iterator_example():
    it = [stre.parse_context("a(d?(), #, #)"), stre.parse_context("b(#, e?())")]
    ct = stre.versatile_iterator_nfta(it)
    assert ct.member(parse_tree("a(d,b(#,e),b(#,e))"))
    assert not ct.member(parse_tree("b(a(d,#,#),e)"))


def test_versatile_trees_lie_in_the_denotation():
    for p in product_sample(20, seed=4):
        assert fta.includes(stre.to_nfta(p), stre.versatile_nfta(p))


def test_large_versatile_trees_contain_everything():
    for p in product_sample(6, seed=5, max_ct_size=3000):
        big = stre.versatile_tree(p, 6)
        assert stre.is_n_large_wrt(big, p, 6)
        assert stre.versatile_nfta(p).member(big)
        for t in stre.to_nfta(p).enumerate(6):
            assert embeds(t, big)


def test_diversify_and_unmark():
    p = stre.parse_product("a?({b(#)}*.c?(), {b(#)}*.c?())")
    q, marks = stre.diversify(p)
    assert stre.is_diversified(q) and not stre.is_diversified(p)
    assert stre.unmark(q, marks) == p
    assert sorted(marks) == ["a_1", "b_1", "b_2", "c_1", "c_2"]
    assert stre.large_pairs(q) == [("b_1", "c_1"), ("b_2", "c_2")]


def test_to_pure_product_cases():
    # no body but a context with a side argument: the argument becomes the body
    p = stre.to_pure_product(stre.parse("{a(#, c?())}*.0").items[0])
    assert stre.is_pure(p)
    assert stre.equivalent(stre.single(p), stre.parse("{a(#, c?())}*.0"))
    # a branching context absorbs a sum body
    s = stre.parse("{a(#, #)}*.(c?() + d?())")
    q = stre.to_pure_product(s.items[0])
    assert stre.is_pure(q) and stre.equivalent(stre.single(q), s)
    with pytest.raises(stre.StreError):
        stre.to_pure_product(stre.parse("{b(#)}*.(c?() + d?())").items[0])
