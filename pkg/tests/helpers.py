"""Shared generators and brute-force oracles for the test suite."""

import itertools
import random
from pathlib import Path

from hoclosure import fta
from hoclosure.trees import RankedAlphabet, RegularTree, Tree

DATA = Path(__file__).resolve().parent.parent / "data"

SMALL = {"a": 2, "b": 1, "c": 0}
ND_ALPHABET = RankedAlphabet({"a": 2, "b1": 1, "b2": 1, "c": 0, "nd": 2, "bot": 0}, nd="nd", bot="bot")


def read(name):
    return (DATA / name).read_text()


def random_tree(rng, letters=SMALL, depth=3):
    leaves = [a for a, r in letters.items() if r == 0]
    inner = [a for a, r in letters.items() if r > 0]
    if depth <= 0 or not inner or rng.random() < 0.3:
        return Tree(rng.choice(leaves))
    a = rng.choice(inner)
    return Tree(a, [random_tree(rng, letters, depth - 1) for _ in range(letters[a])])


def random_nfta(rng, letters=SMALL, max_states=4, max_trans=7):
    k = rng.randint(1, max_states)
    qs = [f"q{i}" for i in range(k)]
    trans = set()
    leaves = [a for a, r in letters.items() if r == 0]
    # at least one leaf rule keeps the automaton from being trivially empty most of the time
    if rng.random() < 0.8:
        trans.add((rng.choice(leaves), (), rng.choice(qs)))
    for _ in range(rng.randint(0, max_trans)):
        a = rng.choice(sorted(letters))
        trans.add((a, tuple(rng.choice(qs) for _ in range(letters[a])), rng.choice(qs)))
    final = rng.sample(qs, rng.randint(1, k))
    return fta.Nfta(letters, qs, final, trans)


def random_nd_tree(rng, n_names, p_nd=0.35):
    """A random regular tree over ND_ALPHABET with at least one nd node."""
    names = [f"N{i}" for i in range(n_names)]
    while True:
        eqs = {}
        for nm in names:
            r = rng.random()
            if r < p_nd:
                eqs[nm] = ("nd", [rng.choice(names), rng.choice(names)])
            elif r < 0.5:
                eqs[nm] = ("a", [rng.choice(names), rng.choice(names)])
            elif r < 0.65:
                eqs[nm] = ("b1", [rng.choice(names)])
            elif r < 0.75:
                eqs[nm] = ("b2", [rng.choice(names)])
            elif r < 0.95:
                eqs[nm] = ("c", [])
            else:
                eqs[nm] = ("bot", [])
        if any(v[0] == "nd" for v in eqs.values()):
            return RegularTree(eqs, "N0")


def brute_members(a, letters, size):
    """Members of L(a) up to `size`, found by running the automaton on every tree."""
    from hoclosure.trees import enumerate_trees

    alpha = RankedAlphabet(letters)
    return {t for t in enumerate_trees(alpha, size) if a.member(t)}


def brute_parity(game):
    """Winner of a tiny max-parity game by trying every positional Eve strategy."""
    eve_nodes = [v for v in range(len(game)) if game.owner[v] == 0 and game.succ[v]]
    choices = [game.succ[v] for v in eve_nodes]
    wins = set(range(len(game)))
    for v in range(len(game)):
        won = False
        for pick in itertools.product(*choices):
            strat = dict(zip(eve_nodes, pick))
            succ = [[strat[u]] if u in strat else list(game.succ[u]) for u in range(len(game))]
            if not _adam_wins(game, succ, v):
                won = True
                break
        if not won:
            wins.discard(v)
    return wins


def _adam_wins(game, succ, start):
    """In the one-player graph, Adam wins iff he reaches a cycle whose top priority is odd."""
    seen, stack = {start}, [start]
    while stack:
        u = stack.pop()
        for w in succ[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    for p in {game.priority[v] for v in seen if game.priority[v] % 2 == 1}:
        allowed = {v for v in seen if game.priority[v] <= p}
        for v in allowed:
            if game.priority[v] != p:
                continue
            # v lies on a cycle inside `allowed`
            st, vis = [w for w in succ[v] if w in allowed], set()
            while st:
                u = st.pop()
                if u == v:
                    return True
                if u in vis:
                    continue
                vis.add(u)
                st.extend(w for w in succ[u] if w in allowed)
    return False


STRE_LETTERS = {"a": 2, "b": 1, "c": 0, "d": 0}


def stre_corpus(n, seed=0, depth=3):
    from hoclosure import stre

    rng = random.Random(seed)
    return [stre.random_stre(rng, STRE_LETTERS, depth) for _ in range(n)]


def product_sample(n, seed=0, max_ct_size=None, n_large=6):
    """Diversified pure products; optionally only those whose n-large versatile tree stays small."""
    from hoclosure import stre

    rng = random.Random(seed)
    out, seen = [], set()
    while len(out) < n:
        p, _ = stre.diversify(stre.random_pure_product(rng, STRE_LETTERS, depth=3))
        key = stre.show(p)
        if key in seen:
            continue
        if max_ct_size is not None and stre.versatile_tree(p, n_large).size() > max_ct_size:
            continue
        seen.add(key)
        out.append(p)
    return out
