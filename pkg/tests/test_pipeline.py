import random

import pytest

from hoclosure import cost, fta, pipeline, stre
from hoclosure.pipeline import LanguageHandle
from hoclosure.schemes import Scheme
from hoclosure.trees import RankedAlphabet, branch_count_ok, downward_closure, parse_tree

from helpers import ND_ALPHABET, SMALL, brute_members, random_nd_tree, random_nfta, read


def _trees(*texts):
    return [parse_tree(t) for t in texts]


def _equal_chains(size=12):
    return LanguageHandle.from_scheme(Scheme.parse(read("equal_chains.scm")), size=size)


# ------------------------------------------------------------ diagonal

def test_diagonal_on_equal_chains():
    # every branch carries only one of b1, b2
    L = _equal_chains()
    for sigma in (["b1"], ["b2"], ["b1", "b2"]):
        best, r = pipeline.diagonal_bruteforce(L, sigma, 4)
        assert best == 0 and r.kind == "no" and not r.exact


def test_diagonal_on_growing_words():
    L = LanguageHandle.from_scheme(Scheme.parse(read("bwords.scm")), size=8)
    best, r = pipeline.diagonal_bruteforce(L, ["b1"], 6)
    assert best == 6 and r.kind == "yes"
    assert pipeline.diagonal_bruteforce(L, ["b2"], 6)[0] == 0


def test_diagonal_fails_on_letters_absent_from_some_branch():
    L = LanguageHandle.from_trees(_trees("a(b1(c),b2(c))", "b1(b1(c))"))
    best, r = pipeline.diagonal_bruteforce(L, ["b1", "b2"], 4)
    assert best == 0 and r.kind == "no"
    best, r = pipeline.diagonal_bruteforce(L, ["b1"], 4)
    assert best == 2


def test_diagonal_with_empty_letter_set_is_nonemptiness():
    assert pipeline.diagonal_bruteforce(LanguageHandle.from_trees(_trees("c")), [], 3)[1].kind == "yes"
    assert pipeline.diagonal_bruteforce(LanguageHandle.from_trees([]), [], 3)[1].kind == "no"


def _brute_large(t, sigma, n):
    return any(branch_count_ok(u, set(sigma), n) for u in brute_members(t, SMALL, 7))


def test_large_search_matches_members():
    rng = random.Random(4)
    hits = 0
    for _ in range(60):
        a = random_nfta(rng)
        sigma = rng.choice([["b"], ["a"], ["a", "b"]])
        for n in range(1, 4):
            found = pipeline.large_nonempty(a, sigma, n)
            if _brute_large(a, sigma, n):
                assert found
                hits += 1
            if not found:
                assert not _brute_large(a, sigma, n)
    assert hits >= 20


def test_diagonal_regular_verdicts():
    rng = random.Random(5)
    kinds = set()
    for _ in range(60):
        a = random_nfta(rng)
        sigma = rng.choice([["b"], ["a", "b"]])
        r = pipeline.diagonal_regular(a, sigma, check_size=7)
        kinds.add(r.kind)
        if r.kind == "no":
            assert r.exact
            top = r.bounds.get("threshold", 1)
            assert a.is_empty() or not pipeline.large_nonempty(a, sigma, top)
        if r.kind == "yes":
            assert not r.exact and pipeline.large_nonempty(a, sigma, 3)
    assert {"yes", "no"} <= kinds


def test_diagonal_automaton_against_exact_resolutions():
    rng = random.Random(7)
    alpha = ND_ALPHABET
    for _ in range(60):
        t = random_nd_tree(rng, rng.randint(2, 5))
        nt = pipeline.nt_nfta(t)
        for sigma in (["b1"], ["b1", "b2"]):
            arena = cost.build_arena(pipeline.diagonal_automaton(sigma, alpha), t)
            for n in range(1, 4):
                # the automaton (n-1)-accepts exactly when no resolution is n-large
                assert cost.n_wins(arena, n - 1) == (not pipeline.large_nonempty(nt, sigma, n))


def test_nt_automaton_matches_resolution_enumeration():
    from hoclosure.trees import nd_resolutions

    rng = random.Random(8)
    for _ in range(40):
        t = random_nd_tree(rng, rng.randint(2, 5))
        assert set(pipeline.nt_nfta(t).enumerate(6)) == nd_resolutions(t.unfold(7), 6)


def test_diagonal_automaton_preconditions():
    with pytest.raises(pipeline.PipelineError):
        pipeline.diagonal_automaton([], ND_ALPHABET)
    with pytest.raises(pipeline.PipelineError):
        pipeline.diagonal_automaton(["b"], RankedAlphabet({"b": 1, "c": 0}))


# ------------------------------------------------------------ SUP

CHAIN = "{b_1(#)}*.c_1?()"


def test_sup_examples():
    lets = {"b_1": 1, "c_1": 0}
    p = stre.parse_product(CHAIN)
    chain = LanguageHandle.from_nfta(stre.to_nfta(p).with_letters(lets))
    assert pipeline.sup_check(p, chain).kind == "yes"
    single = LanguageHandle.from_trees(_trees("c_1"), lets)
    r = pipeline.sup_check(p, single)
    assert r.kind == "no" and r.exact


def test_sup_with_two_blocks():
    p = stre.parse_product("{a_1(#)}*.{a_2(#)}*.c_1?()")
    full = LanguageHandle.from_nfta(stre.to_nfta(p))
    assert pipeline.sup_check(p, full).kind == "yes"
    only_first = stre.parse("{a_1(#)}*.c_1?()")
    half = LanguageHandle.from_nfta(stre.to_nfta(only_first).with_letters(full.letters))
    assert pipeline.sup_check(p, half).kind == "no"


def test_sup_on_branching_iteration():
    p, _ = stre.diversify(stre.parse_product("{a(#, #)}*.c?()"))
    lang = LanguageHandle.from_nfta(stre.to_nfta(p))
    assert pipeline.sup_check(p, lang).kind == "yes"
    finite = LanguageHandle.from_trees(_trees("a_1(c_1,c_1)", "c_1"), lang.letters)
    assert pipeline.sup_check(p, finite).kind == "no"


def test_sup_preconditions():
    p = stre.parse_product(CHAIN)
    bad = LanguageHandle.from_trees(_trees("b_1(d)"))
    with pytest.raises(pipeline.PipelineError) as e:
        pipeline.sup_check(p, bad)
    assert str(e.value.witness) == "b_1(d)"
    with pytest.raises(pipeline.PipelineError):
        pipeline.sup_check(stre.parse_product("{b(#)}*.{b(#)}*.c?()"), LanguageHandle.from_trees(_trees("c")))


def test_sup_agrees_with_inclusion_on_products():
    # for an automaton inside the product, SUP holds iff the product lies under the closure
    rng = random.Random(3)
    checked = 0
    for _ in range(40):
        p, _ = stre.diversify(stre.random_pure_product(rng, {"a": 2, "b": 1, "c": 0, "d": 0}, depth=2))
        full = stre.to_nfta(p)
        sub = fta.product(full, random_nfta(rng, full.letters, max_states=3, max_trans=8))
        if sub.trim().is_empty():
            continue
        L = LanguageHandle.from_nfta(sub.trim())
        r = pipeline.sup_check(p, L)
        truth = fta.includes(pipeline.downward_closure_regular(sub), full)
        if r.kind != "unknown":
            assert (r.kind == "yes") == truth, stre.show(p)
            checked += 1
    assert checked >= 10


# ------------------------------------------------------------ emptiness

def test_emptiness_through_sup():
    rng = random.Random(11)
    outcomes = set()
    for i in range(60):
        a = random_nfta(rng, max_states=3, max_trans=4 + i % 5)
        r = pipeline.emptiness_via_sup(LanguageHandle.from_nfta(a))
        assert (r.kind == "yes") == a.is_empty()
        outcomes.add(r.kind)
    assert outcomes == {"yes", "no"}


def test_emptiness_of_schemes():
    r = pipeline.emptiness_via_sup(_equal_chains(8))
    assert r.kind == "no"


# ------------------------------------------------------------ downward closures

def test_regular_downward_closure_matches_brute_force():
    rng = random.Random(6)
    for _ in range(30):
        a = random_nfta(rng)
        d = pipeline.downward_closure_regular(a)
        want = {u for u in downward_closure(brute_members(a, SMALL, 6)) if u.size() <= 4}
        assert want <= set(d.enumerate(4))
        for u in d.enumerate(4):
            assert any(u in downward_closure([t]) for t in a.enumerate(8)) or u.size() > 4


@pytest.mark.parametrize("trees,expected", [
    (["c"], "c?()"),
    (["b1(c)", "c"], "b1?(c?())"),
])
def test_closure_search_small(trees, expected):
    cand, _, r = pipeline.downward_closure_search(LanguageHandle.from_trees(_trees(*trees)), 5)
    assert r.kind == "yes" and r.exact
    assert stre.show(cand) == expected


def test_closure_search_verifies_both_inclusions():
    L = LanguageHandle.from_trees(_trees("a(c,d)", "b(c)"))
    cand, lines, r = pipeline.downward_closure_search(L, 6)
    assert r.kind == "yes"
    assert fta.equivalent(stre.to_nfta(cand).with_letters(L.letters),
                          fta.from_trees(downward_closure(L.obj), L.letters))
    assert any("(a)" in x and "yes" in x for x in lines)


def test_closure_search_reports_frontier_when_bound_is_small():
    L = LanguageHandle.from_trees(_trees("a(b(c),b(d))"))
    cand, _, r = pipeline.downward_closure_search(L, 2)
    assert cand is None and r.kind == "unknown"


def test_maximal_products():
    ps = [stre.parse_product(x) for x in ["c?()", "b?(c?())", "{b(#)}*.c?()"]]
    assert [stre.show(p) for p in pipeline.maximal_products(ps)] == ["{b(#)}*.c?()"]
