import random

import pytest

from hoclosure import fta
from hoclosure.fta import EpsBuilder, Nfta
from hoclosure.trees import parse_tree

from helpers import SMALL, brute_members, random_nfta

SIZE = 5


def _pairs(seed, n):
    rng = random.Random(seed)
    return [(random_nfta(rng), random_nfta(rng)) for _ in range(n)]


def test_parse_and_text_round_trip():
    a = Nfta.parse("letters a/2 b/1 c/0\nfinal q\nc -> p\nb(p) -> q\na(p,q) -> q\n")
    assert a.member(parse_tree("b(c)"))
    assert a.member(parse_tree("a(c,b(c))"))
    assert not a.member(parse_tree("c"))
    b = Nfta.parse(a.to_text())
    assert fta.equivalent(a, b)


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        Nfta.parse("c ->")


@pytest.mark.parametrize("seed", range(4))
def test_boolean_operations_match_membership(seed):
    for a, b in _pairs(seed, 10):
        ma, mb = brute_members(a, SMALL, SIZE), brute_members(b, SMALL, SIZE)
        assert set(a.enumerate(SIZE)) == ma
        assert brute_members(fta.product(a, b), SMALL, SIZE) == ma & mb
        assert brute_members(fta.union(a, b), SMALL, SIZE) == ma | mb
        comp = fta.complement(a, SMALL)
        assert brute_members(comp, SMALL, SIZE) == brute_members(fta.universal(SMALL), SMALL, SIZE) - ma
        assert brute_members(fta.determinize(a, SMALL), SMALL, SIZE) == ma
        if ma:
            assert not a.is_empty()


@pytest.mark.parametrize("seed", range(4))
def test_inclusion_and_counterexamples(seed):
    for a, b in _pairs(100 + seed, 10):
        ma, mb = brute_members(a, SMALL, SIZE), brute_members(b, SMALL, SIZE)
        inc = fta.includes(a, b)  # L(b) inside L(a)
        if not mb <= ma:
            assert not inc
        cex = fta.counterexample(a, b)
        assert (cex is None) == inc
        if cex is not None:
            assert b.member(cex) and not a.member(cex)


@pytest.mark.parametrize("seed", range(3))
def test_emptiness_and_witness(seed):
    rng = random.Random(seed)
    for _ in range(30):
        a = random_nfta(rng)
        w = a.witness()
        assert (w is None) == a.is_empty()
        if w is not None:
            assert a.member(w)
        if brute_members(a, SMALL, SIZE):
            assert not a.is_empty()


def test_trim_and_renumber_keep_language():
    rng = random.Random(9)
    for _ in range(30):
        a = random_nfta(rng)
        assert fta.equivalent(a, a.trim())
        assert fta.equivalent(a, a.renumber())


def test_eps_builder_links():
    eb = EpsBuilder()
    eb.add("c", (), "leaf")
    eb.add("b", ("top",), "top2")
    eb.link("leaf", "top")
    eb.link("top2", "top")
    a = eb.build(["top"], letters=SMALL)
    assert a.member(parse_tree("b(b(c))"))
    assert not a.member(parse_tree("a(c,c)"))


def test_from_trees_is_exact():
    ts = [parse_tree("a(c,c)"), parse_tree("b(c)")]
    a = fta.from_trees(ts, SMALL)
    assert set(a.enumerate(6)) == set(ts)


def test_bottom_up_counts_sizes():
    a = Nfta.parse("letters b/1 c/0\nfinal q\nc -> q\nb(q) -> q\n")
    items = fta.bottom_up(a, lambda l, q, kids: [min(3, 1 + sum(kids))])
    assert items["q"] == {1, 2, 3}
