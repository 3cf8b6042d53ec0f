"""Bottom-up nondeterministic finite tree automata."""

import itertools
import re
from collections import defaultdict

from .trees import Tree, AlphabetError, merge_letters


class Nfta:
    """States are any hashable values; transitions are (letter, child states, target)."""

    def __init__(self, letters, states, final, transitions):
        self.letters = dict(letters)
        self.transitions = frozenset((a, tuple(ch), q) for a, ch, q in transitions)
        self.states = frozenset(states) | {q for _, _, q in self.transitions} | {
            c for _, ch, _ in self.transitions for c in ch}
        self.final = frozenset(final)
        for a, ch, _ in self.transitions:
            if a not in self.letters:
                raise AlphabetError(f"transition on undeclared letter {a}")
            if self.letters[a] != len(ch):
                raise AlphabetError(f"{a} has rank {self.letters[a]}, transition has {len(ch)} children")
        self._by_letter = None
        self._by_key = None

    # indexes ---------------------------------------------------------
    def by_letter(self):
        if self._by_letter is None:
            idx = defaultdict(list)
            for t in sorted(self.transitions, key=repr):
                idx[t[0]].append(t)
            self._by_letter = idx
        return self._by_letter

    def by_key(self):
        if self._by_key is None:
            idx = defaultdict(set)
            for a, ch, q in self.transitions:
                idx[(a, ch)].add(q)
            self._by_key = idx
        return self._by_key

    # runs --------------------------------------------------------------
    def run(self, tree):
        """Set of states reachable at the root of `tree`."""
        memo = {}

        def go(t):
            if t in memo:
                return memo[t]
            kids = [go(c) for c in t.children]
            out = set()
            for a, ch, q in self.by_letter().get(t.label, ()):
                if len(ch) == len(kids) and all(c in k for c, k in zip(ch, kids)):
                    out.add(q)
            memo[t] = out
            return out

        return go(tree)

    def member(self, tree):
        return bool(self.run(tree) & self.final)

    def reachable(self):
        """States that accept at least one tree."""
        seen = set()
        changed = True
        trans = sorted(self.transitions, key=repr)
        while changed:
            changed = False
            for a, ch, q in trans:
                if q not in seen and all(c in seen for c in ch):
                    seen.add(q)
                    changed = True
        return seen

    def is_empty(self):
        return not (self.reachable() & self.final)

    def witness(self):
        """A smallest-ish accepted tree, or None."""
        best = {}
        changed = True
        trans = sorted(self.transitions, key=repr)
        while changed:
            changed = False
            for a, ch, q in trans:
                if all(c in best for c in ch):
                    t = Tree(a, [best[c] for c in ch])
                    if q not in best or t.size() < best[q].size():
                        best[q] = t
                        changed = True
        cands = [best[q] for q in self.final if q in best]
        return min(cands, key=lambda t: (t.size(), str(t))) if cands else None

    def trim(self):
        """Drop states that are unreachable or cannot lead to a final state."""
        reach = self.reachable()
        trans = [t for t in self.transitions if t[2] in reach and all(c in reach for c in t[1])]
        useful = set(self.final & reach)
        changed = True
        while changed:
            changed = False
            for a, ch, q in trans:
                if q in useful:
                    for c in ch:
                        if c not in useful:
                            useful.add(c)
                            changed = True
        trans = [t for t in trans if t[2] in useful]
        return Nfta(self.letters, useful, self.final & useful, trans)

    def renumber(self, prefix="q"):
        """Canonical state names, stable across runs."""
        order = sorted(self.states, key=repr)
        name = {s: f"{prefix}{i}" for i, s in enumerate(order)}
        return Nfta(self.letters, name.values(), [name[s] for s in self.final],
                    [(a, [name[c] for c in ch], name[q]) for a, ch, q in self.transitions])

    def with_letters(self, letters):
        return Nfta(merge_letters(self.letters, letters), self.states, self.final, self.transitions)

    def enumerate(self, max_size, limit=None):
        """Accepted trees with at most max_size nodes, smallest first."""
        by = defaultdict(lambda: defaultdict(set))  # state -> size -> trees
        trans = sorted(self.transitions, key=repr)
        for s in range(1, max_size + 1):
            for a, ch, q in trans:
                if not ch:
                    if s == 1:
                        by[q][1].add(Tree(a))
                    continue
                for split in _compositions(s - 1, len(ch)):
                    pools = [by[c][k] for c, k in zip(ch, split)]
                    if not all(pools):
                        continue
                    for kids in itertools.product(*pools):
                        by[q][s].add(Tree(a, kids))
        out = set()
        for q in self.final:
            for s in by[q]:
                out |= by[q][s]
        res = sorted(out, key=lambda t: (t.size(), str(t)))
        return res[:limit] if limit is not None else res

    # text format -------------------------------------------------------
    @classmethod
    def parse(cls, text):
        states, final, trans, letters = set(), set(), [], {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("--")[0].strip()
            if not line:
                continue
            head, _, rest = line.partition(" ")
            if head == "states":
                states |= set(rest.split())
            elif head == "final":
                final |= set(rest.split())
            elif head == "letters":
                for tok in rest.split():
                    a, _, r = tok.partition("/")
                    letters = merge_letters(letters, {a: int(r)})
            else:
                m = re.fullmatch(r"([^\s(]+)\s*(?:\(([^)]*)\))?\s*->\s*(\S+)", line)
                if not m:
                    raise ValueError(f"line {lineno}: cannot parse {raw!r}")
                kids = [k.strip() for k in m.group(2).split(",")] if m.group(2) else []
                letters = merge_letters(letters, {m.group(1): len(kids)})
                trans.append((m.group(1), kids, m.group(3)))
        return cls(letters, states, final, trans)

    def to_text(self):
        plain = all(isinstance(s, str) and re.fullmatch(r"[A-Za-z0-9_']+", s) for s in self.states)
        a = self if plain else self.renumber()
        lines = ["letters " + " ".join(f"{x}/{r}" for x, r in sorted(a.letters.items())),
                 "states " + " ".join(sorted(a.states)),
                 "final " + " ".join(sorted(a.final))]
        for l, ch, q in sorted(a.transitions):
            lines.append(f"{l}({','.join(ch)}) -> {q}" if ch else f"{l} -> {q}")
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return f"Nfta({len(self.states)} states, {len(self.transitions)} transitions)"


def _compositions(total, parts):
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class EpsBuilder:
    """Accumulates transitions plus state-to-state epsilon edges."""

    def __init__(self):
        self.letters = {}
        self.trans = set()
        self.eps = defaultdict(set)  # p -> {q}: trees reaching p also reach q
        self.counter = 0

    def fresh(self, tag="s"):
        self.counter += 1
        return (tag, self.counter)

    def add(self, letter, children, target):
        self.letters = merge_letters(self.letters, {letter: len(children)})
        self.trans.add((letter, tuple(children), target))

    def link(self, src, dst):
        if src != dst:
            self.eps[src].add(dst)

    def closure(self, p):
        seen, stack = {p}, [p]
        while stack:
            x = stack.pop()
            for y in self.eps.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen

    def build(self, final, letters=None, trim=True):
        trans = set()
        cl = {}
        for a, ch, q in self.trans:
            if q not in cl:
                cl[q] = self.closure(q)
            for r in cl[q]:
                trans.add((a, ch, r))
        alph = merge_letters(self.letters, letters or {})
        nf = Nfta(alph, {q for _, _, q in trans}, final, trans)
        return nf.trim() if trim else nf


def check_letters(a, b):
    return merge_letters(a.letters, b.letters)


def bottom_up(auto, step, start=None):
    """Saturate pairs (state of `auto`, aux) bottom-up.

    step(letter, target, child_aux_tuple) yields aux values for target.
    Returns dict state -> set of aux.
    """
    items = defaultdict(set)
    by_child = defaultdict(list)
    trans = sorted(auto.transitions, key=repr)
    work = []
    for t in trans:
        a, ch, q = t
        for i, c in enumerate(ch):
            by_child[c].append((t, i))
        if not ch:
            for x in step(a, q, ()):
                if x not in items[q]:
                    items[q].add(x)
                    work.append((q, x))
    while work:
        state, aux = work.pop()
        for (a, ch, q), i in by_child[state]:
            pools = [items[c] if j != i else (aux,) for j, c in enumerate(ch)]
            if not all(pools):
                continue
            for combo in itertools.product(*[list(p) for p in pools]):
                for x in step(a, q, combo):
                    if x not in items[q]:
                        items[q].add(x)
                        work.append((q, x))
    return items


def product(a, b):
    """Intersection automaton; states are pairs."""
    letters = check_letters(a, b)
    bkey = b.by_key()

    def step(letter, qa, kids):
        bch = tuple(k for k in kids)
        return bkey.get((letter, bch), ())

    items = bottom_up(a, step)
    trans = set()
    # rebuild explicit transitions over reachable pairs
    for (letter, ch, qa) in a.transitions:
        pools = [sorted(items[c], key=repr) for c in ch]
        if not all(pools) and ch:
            continue
        for combo in itertools.product(*pools):
            for qb in bkey.get((letter, tuple(combo)), ()):
                trans.add((letter, tuple(zip(ch, combo)), (qa, qb)))
    final = {(p, q) for p in a.final for q in b.final}
    states = {q for _, _, q in trans}
    return Nfta(letters, states, final & states, trans)


def union(a, b):
    letters = check_letters(a, b)
    trans = [(l, [(0, c) for c in ch], (0, q)) for l, ch, q in a.transitions]
    trans += [(l, [(1, c) for c in ch], (1, q)) for l, ch, q in b.transitions]
    final = [(0, q) for q in a.final] + [(1, q) for q in b.final]
    return Nfta(letters, [(0, q) for q in a.states] + [(1, q) for q in b.states], final, trans)


def union_all(autos, letters=None):
    letters = merge_letters(letters or {}, *[a.letters for a in autos])
    trans, final, states = [], [], []
    for i, a in enumerate(autos):
        trans += [(l, [(i, c) for c in ch], (i, q)) for l, ch, q in a.transitions]
        final += [(i, q) for q in a.final]
        states += [(i, q) for q in a.states]
    return Nfta(letters, states, final, trans)


def determinize(a, letters=None):
    """Complete deterministic automaton by the subset construction.

    States are frozensets of states of `a`; the empty set is the sink.
    """
    letters = merge_letters(a.letters, letters or {})
    idx = a.by_letter()

    def target(letter, subsets):
        out = set()
        for _, ch, q in idx.get(letter, ()):
            if all(c in s for c, s in zip(ch, subsets)):
                out.add(q)
        return frozenset(out)

    found = []
    seen = set()
    trans = {}
    for l in sorted(letters):
        if letters[l] == 0:
            s = target(l, ())
            trans[(l, ())] = s
            if s not in seen:
                seen.add(s)
                found.append(s)
    done = 0
    while done < len(found):
        # process every tuple that involves at least one subset with index >= done
        limit = len(found)
        for l in sorted(letters):
            r = letters[l]
            if r == 0:
                continue
            for combo in itertools.product(range(limit), repeat=r):
                if max(combo) < done:
                    continue
                subsets = tuple(found[i] for i in combo)
                s = target(l, subsets)
                trans[(l, subsets)] = s
                if s not in seen:
                    seen.add(s)
                    found.append(s)
        done = limit
    if not found:
        # no constants at all: the language over these letters is empty
        found.append(frozenset())
    final = [s for s in found if s & a.final]
    return Nfta(letters, found, final, [(l, ch, q) for (l, ch), q in trans.items()])


def complement(a, letters=None):
    d = determinize(a, letters)
    return Nfta(d.letters, d.states, d.states - d.final, d.transitions)


def is_deterministic_complete(a):
    seen = {}
    for l, ch, q in a.transitions:
        if (l, ch) in seen:
            return False
        seen[(l, ch)] = q
    for l, r in a.letters.items():
        for combo in itertools.product(sorted(a.states, key=repr), repeat=r):
            if (l, tuple(combo)) not in seen:
                return False
    return True


def includes(a, b):
    """L(b) is a subset of L(a)."""
    return counterexample(a, b) is None


def counterexample(a, b):
    """A tree of L(b) outside L(a), or None."""
    merge_letters(a.letters, b.letters)
    idx = a.by_letter()

    def det(letter, subsets):
        out = set()
        for _, ch, q in idx.get(letter, ()):
            if all(c in s for c, s in zip(ch, subsets)):
                out.add(q)
        return frozenset(out)

    wit = {}

    def step(letter, qb, kids):
        s = det(letter, kids)
        return (s,)

    # track one witness tree per (state, subset) pair
    items = defaultdict(set)
    by_child = defaultdict(list)
    trans = sorted(b.transitions, key=repr)
    work = []
    for t in trans:
        l, ch, q = t
        for i, c in enumerate(ch):
            by_child[c].append((t, i))
        if not ch:
            s = det(l, ())
            if s not in items[q]:
                items[q].add(s)
                wit[(q, s)] = Tree(l)
                work.append((q, s))
    while work:
        state, aux = work.pop()
        if state in b.final and not (aux & a.final):
            return wit[(state, aux)]
        for (l, ch, q), i in by_child[state]:
            pools = [sorted(items[c], key=repr) if j != i else [aux] for j, c in enumerate(ch)]
            if not all(pools):
                continue
            for combo in itertools.product(*pools):
                s = det(l, combo)
                if s not in items[q]:
                    items[q].add(s)
                    wit[(q, s)] = Tree(l, [wit[(c, x)] for c, x in zip(ch, combo)])
                    work.append((q, s))
    for q in b.final:
        for s in items.get(q, ()):
            if not (s & a.final):
                return wit[(q, s)]
    return None


def equivalent(a, b):
    return includes(a, b) and includes(b, a)


def universal(letters):
    return Nfta(letters, ["u"], ["u"], [(l, ["u"] * r, "u") for l, r in letters.items()])


def empty(letters):
    return Nfta(letters, [], [], [])


def from_trees(trees, letters=None):
    """Automaton for a finite set; one state per distinct subtree."""
    trans = set()
    final = set()
    let = dict(letters or {})
    for t in trees:
        for node in t.nodes():
            let = merge_letters(let, {node.label: len(node.children)})
            trans.add((node.label, tuple(str(c) for c in node.children), str(node)))
        final.add(str(t))
    return Nfta(let, {q for _, _, q in trans}, final, trans)


def restrict_letters(a, keep):
    """Drop transitions on letters outside `keep`."""
    trans = [t for t in a.transitions if t[0] in keep]
    letters = {l: r for l, r in a.letters.items() if l in keep}
    return Nfta(letters, a.states, a.final, trans)
