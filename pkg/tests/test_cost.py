import random
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hoclosure import cost
from hoclosure.cost import EPS, INC, INF, RESET, STAY, BAutomaton, Game
from hoclosure.trees import RegularTree

from helpers import brute_parity, read

ACTS = st.sampled_from([INC, RESET, EPS])


def chain():
    return RegularTree.parse(read("bchain.rtree"))


# ---------------------------------------------------------------- valuation

def test_value_examples():
    assert cost.val([INC, INC, RESET, EPS, INC, EPS]) == 2
    assert cost.val([], [INC, RESET]) == 1
    # i r i^2 r i^3 r ...: every prefix ending in i^k has value k, so the supremum is infinite
    word = []
    for k in range(1, 30):
        word += [INC] * k
        assert cost.val(word) == k
        word.append(RESET)
    assert cost.val([], [INC]) == INF


@settings(max_examples=300, deadline=None)
@given(st.lists(ACTS, max_size=6), st.lists(ACTS, min_size=1, max_size=5))
def test_lasso_value_equals_three_unfoldings(prefix, cycle):
    v = cost.val(prefix, cycle)
    if v != INF:
        assert v == cost.val(prefix + cycle * 3)
    else:
        assert INC in cycle and RESET not in cycle


def test_several_counters_take_the_maximum():
    assert cost.val([(INC, EPS), (INC, INC), (RESET, INC)]) == 2
    assert cost.val(["i,e", "i,i", "r,i", "e,i"]) == 3


# ---------------------------------------------------------------- parity games

def random_game(rng, n):
    g = Game()
    for _ in range(n):
        g.add(rng.randint(0, 1), rng.randint(0, 3))
    for v in range(n):
        g.succ[v] = sorted(set(rng.choice(range(n)) for _ in range(rng.randint(1, 3))))
    return g


@pytest.mark.parametrize("seed", range(5))
def test_parity_solver_matches_strategy_enumeration(seed):
    rng = random.Random(seed)
    for _ in range(40):
        g = random_game(rng, rng.randint(1, 6))
        eve, adam = cost.solve_parity(g)
        assert eve | adam == set(range(len(g))) and not eve & adam
        assert eve == brute_parity(g)


# ---------------------------------------------------------------- automata

def test_one_way_golden():
    a = BAutomaton.parse(read("oneway_b.baut"))
    assert a.one_way()
    arena = cost.build_arena(a, chain())
    assert not cost.n_wins(arena, 0)
    assert cost.n_wins(arena, 1)
    assert str(cost.accepts_bounded(a, chain(), 3)) == "accepted_at 1"


def test_two_way_never_contradicts_one_way():
    a2 = BAutomaton.parse(read("twoway_b.baut"))
    assert not a2.one_way()
    t0 = time.perf_counter()
    v = cost.accepts_bounded(a2, chain(), 3, fuel=20000)
    assert v.kind in ("accepted", "unknown")
    if v.kind == "accepted":
        assert v.n >= 1
    assert time.perf_counter() - t0 < 5


def test_text_round_trip():
    a = BAutomaton.parse(read("twoway_b.baut"))
    b = BAutomaton.parse(a.to_text())
    assert b.delta == a.delta and b.priority == a.priority and b.init == a.init


def test_rejects_malformed_automata():
    with pytest.raises(cost.AutomatonError):
        BAutomaton.parse("letters b/1\nstates q:0\ncounters 1\nq, b -> (down2 i q)\n")
    with pytest.raises(cost.AutomatonError):
        BAutomaton.parse("letters b/1\nstates q:0\ncounters 1\nq, b -> (up i q)\n")


def test_accept_all_accepts_at_zero():
    a = BAutomaton.parse("letters b/1\nstates q:0\ncounters 0\nq, b -> true\n")
    assert str(cost.accepts_bounded(a, chain(), 3)) == "accepted_at 0"


def test_counting_every_letter_on_infinite_chain_is_unbounded():
    a = BAutomaton.parse("letters b/1\nstates q:0\ncounters 1\nq, b -> (down1 i q)\n")
    v = cost.accepts_bounded(a, chain(), 5)
    assert v.kind == "rejected" and v.n == 5


def random_automaton(rng):
    letters = {"a": 2, "b": 1, "c": 0}
    states = [f"q{i}" for i in range(rng.randint(1, 3))]
    delta = {}
    for q in states:
        for x, r in letters.items():
            dirs = [STAY] + list(range(1, r + 1))
            disj = []
            for _ in range(rng.randint(0, 2)):
                disj.append(tuple((rng.choice(dirs), (rng.choice([INC, RESET, EPS]),), rng.choice(states))
                                  for _ in range(rng.randint(0, 2))))
            delta[(q, x)] = disj
    return BAutomaton(letters, states, states[0], {q: rng.randint(0, 2) for q in states}, 1, delta)


def random_regular(rng):
    names = [f"N{i}" for i in range(rng.randint(1, 4))]
    eqs = {}
    for nm in names:
        x = rng.choice(["a", "b", "c"])
        eqs[nm] = (x, [rng.choice(names) for _ in range({"a": 2, "b": 1, "c": 0}[x])])
    return RegularTree(eqs, "N0")


@pytest.mark.parametrize("seed", range(4))
def test_n_wins_is_monotone(seed):
    rng = random.Random(seed)
    for _ in range(25):
        a, t = random_automaton(rng), random_regular(rng)
        arena = cost.build_arena(a, t)
        wins = [cost.n_wins(arena, n) for n in range(5)]
        assert all(not w or w2 for w, w2 in zip(wins, wins[1:]))


@pytest.mark.parametrize("seed", range(3))
def test_counter_free_acceptance_is_plain_parity(seed):
    rng = random.Random(seed)
    for _ in range(25):
        a = random_automaton(rng)
        a = BAutomaton(a.letters, a.states, a.init, a.priority, 0,
                       {k: [tuple((d, (), q) for d, _, q in conj) for conj in v] for k, v in a.delta.items()})
        t = random_regular(rng)
        arena = cost.build_arena(a, t)
        g, root, _, _ = cost._counter_game(arena.positions[0], lambda p: arena.moves[p],
                                           lambda p: a.priority[p[1]], 0, 0)
        if len(g) <= 9:
            assert (root in brute_parity(g)) == cost.n_wins(arena, 0)
