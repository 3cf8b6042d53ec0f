"""Alternating B-automata with counters, their games, and a parity solver."""

import itertools
import re
from collections import defaultdict, deque
from dataclasses import dataclass, field

from .trees import RegularTree, Tree, merge_letters

INF = float("inf")
INC, RESET, EPS = "i", "r", "e"
UP, STAY = "up", "stay"


# ---------------------------------------------------------------- valuation

def _norm(action, k=None):
    if isinstance(action, str):
        return tuple(action.split(",")) if "," in action else (action,)
    return tuple(action)


def val(word, cycle=None):
    """Supremum of counter values over a finite word, or over word·cycle^ω."""
    word = [_norm(a) for a in word]
    cyc = [_norm(a) for a in cycle] if cycle else []
    width = len((word or cyc or [()])[0])
    if cyc:
        for c in range(width):
            letters = {a[c] for a in cyc}
            if INC in letters and RESET not in letters:
                return INF
        # two passes over the cycle expose every value it can reach
        word = word + cyc + cyc
    best = 0
    vals = [0] * width
    for a in word:
        for c in range(width):
            if a[c] == INC:
                vals[c] += 1
            elif a[c] == RESET:
                vals[c] = 0
        best = max([best] + vals)
    return best


def apply_action(action, counters, cap):
    """New counter vector, or None once some counter exceeds cap."""
    out = list(counters)
    for c, x in enumerate(action):
        if x == INC:
            out[c] += 1
            if out[c] > cap:
                return None
        elif x == RESET:
            out[c] = 0
    return tuple(out)


# ---------------------------------------------------------------- automata

class AutomatonError(ValueError):
    pass


@dataclass
class BAutomaton:
    """delta maps (state, letter) to a list of disjuncts; a disjunct is a tuple of
    (direction, action, state) with direction "up", "stay" or a 1-based child index."""

    letters: dict
    states: list
    init: object
    priority: dict
    counters: int
    delta: dict
    names: dict = field(default_factory=dict)

    def __post_init__(self):
        for (q, a), disj in self.delta.items():
            if a not in self.letters:
                raise AutomatonError(f"transition on unknown letter {a}")
            if q not in self.priority:
                raise AutomatonError(f"transition from unknown state {q}")
            for d in disj:
                for direction, act, q2 in d:
                    if q2 not in self.priority:
                        raise AutomatonError(f"unknown target state {q2}")
                    if len(act) != self.counters:
                        raise AutomatonError(f"action {act} does not match {self.counters} counters")
                    if isinstance(direction, int) and not 1 <= direction <= self.letters[a]:
                        raise AutomatonError(f"down{direction} on {a} of rank {self.letters[a]}")
            if disj and all(any(t[0] == UP for t in d) for d in disj):
                raise AutomatonError(f"every disjunct of ({q},{a}) moves up")

    def moves(self, q, a):
        return self.delta.get((q, a), [])

    def one_way(self):
        return not any(t[0] == UP for disj in self.delta.values() for d in disj for t in d)

    # text format
    @classmethod
    def parse(cls, text):
        letters, prio, counters, init, delta, order = None, {}, 0, None, {}, []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("--")[0].strip()
            if not line:
                continue
            try:
                head, _, rest = line.partition(" ")
                if head == "letters":
                    letters = {}
                    for tok in rest.split():
                        a, _, r = tok.partition("/")
                        letters = merge_letters(letters, {a: int(r)})
                elif head == "states":
                    for tok in rest.split():
                        q, _, p = tok.partition(":")
                        prio[q] = int(p or 0)
                        order.append(q)
                elif head == "counters":
                    counters = int(rest)
                elif head == "init":
                    init = rest.strip()
                else:
                    lhs, arrow_, rhs = line.partition("->")
                    if not arrow_:
                        raise AutomatonError("expected `q, a -> formula`")
                    q, _, a = lhs.partition(",")
                    delta[(q.strip(), a.strip())] = _parse_formula(rhs, counters)
            except (ValueError, AutomatonError) as e:
                raise AutomatonError(f"line {lineno}: {e}") from None
        if letters is None:
            raise AutomatonError("missing `letters` line")
        if init is None:
            init = order[0] if order else None
        if init not in prio:
            raise AutomatonError(f"initial state {init} undeclared")
        return cls(letters, order, init, prio, counters, delta)

    def to_text(self):
        lines = ["letters " + " ".join(f"{a}/{r}" for a, r in sorted(self.letters.items())),
                 "states " + " ".join(f"{_sname(q)}:{self.priority[q]}" for q in self.states),
                 f"counters {self.counters}",
                 f"init {_sname(self.init)}"]
        for (q, a) in sorted(self.delta, key=repr):
            lines.append(f"{_sname(q)}, {a} -> {_show_formula(self.delta[(q, a)], self.counters)}")
        return "\n".join(lines) + "\n"


def _sname(q):
    return q if isinstance(q, str) else re.sub(r"[^A-Za-z0-9_]+", "_", repr(q)).strip("_")


def _parse_formula(text, counters):
    text = text.strip()
    if text == "false":
        return []
    out = []
    for part in text.split("|"):
        part = part.strip()
        if part.startswith("(") and part.endswith(")"):
            part = part[1:-1].strip()
        if part == "true":
            out.append(())
            continue
        triples = []
        for t in part.split("&"):
            toks = t.split()
            if len(toks) != 3:
                raise AutomatonError(f"bad triple {t.strip()!r}")
            d, act, q = toks
            if d.startswith("down"):
                direction = int(d[4:])
            elif d in (UP, STAY):
                direction = d
            else:
                raise AutomatonError(f"bad direction {d!r}")
            action = () if act == "-" else tuple(act.split(","))
            if len(action) != counters or any(x not in (INC, RESET, EPS) for x in action):
                raise AutomatonError(f"bad action {act!r} for {counters} counters")
            triples.append((direction, action, q))
        out.append(tuple(triples))
    return out


def _show_formula(disj, counters):
    if not disj:
        return "false"
    parts = []
    for d in disj:
        if not d:
            parts.append("true")
            continue
        ts = []
        for direction, act, q in d:
            dname = f"down{direction}" if isinstance(direction, int) else direction
            ts.append(f"{dname} {','.join(act) if act else '-'} {_sname(q)}")
        parts.append("(" + " & ".join(ts) + ")")
    return " | ".join(parts)


# ---------------------------------------------------------------- parity games

@dataclass
class Game:
    """Max-parity game: Eve (0) wins when the largest priority seen infinitely often is even."""

    owner: list = field(default_factory=list)
    priority: list = field(default_factory=list)
    succ: list = field(default_factory=list)
    label: list = field(default_factory=list)

    def add(self, owner, prio, label=None):
        self.owner.append(owner)
        self.priority.append(prio)
        self.succ.append([])
        self.label.append(label)
        return len(self.owner) - 1

    def __len__(self):
        return len(self.owner)


def _attractor(game, nodes, target, player, preds):
    attr = set(target)
    count = {}
    queue = deque(attr)
    while queue:
        v = queue.popleft()
        for u in preds[v]:
            if u not in nodes or u in attr:
                continue
            if game.owner[u] == player:
                attr.add(u)
                queue.append(u)
            else:
                if u not in count:
                    count[u] = sum(1 for w in game.succ[u] if w in nodes)
                count[u] -= 1
                if count[u] == 0:
                    attr.add(u)
                    queue.append(u)
    return attr


def solve_parity(game):
    """Winning regions (eve, adam) by recursive attractor decomposition."""
    preds = [[] for _ in range(len(game))]
    for v, ss in enumerate(game.succ):
        for w in ss:
            preds[w].append(v)

    def rec(nodes):
        if not nodes:
            return set(), set()
        p = max(game.priority[v] for v in nodes)
        i = p % 2
        top = {v for v in nodes if game.priority[v] == p}
        a = _attractor(game, nodes, top, i, preds)
        w = rec(nodes - a)
        if not w[1 - i]:
            res = [set(), set()]
            res[i] = set(nodes)
            return tuple(res)
        b = _attractor(game, nodes, w[1 - i], 1 - i, preds)
        w2 = rec(nodes - b)
        res = [set(), set()]
        res[1 - i] = w2[1 - i] | b
        res[i] = w2[i]
        return tuple(res)

    import sys
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10000))
    try:
        return rec(set(range(len(game))))
    finally:
        sys.setrecursionlimit(old)


# ---------------------------------------------------------------- arenas

@dataclass
class GameArena:
    """Finite arena of a one-way automaton over a regular tree.

    Eve positions are (name, state); her moves pick a disjunct index, after
    which Adam picks a triple (action, target position).
    """

    automaton: BAutomaton
    tree: RegularTree
    positions: list
    moves: dict  # (name, state) -> list of disjuncts, each a list of (action, (name, state))

    def eve_positions(self):
        return len(self.positions)


def build_arena(a, t):
    if not a.one_way():
        raise AutomatonError("arena construction needs a one-way automaton")
    for n in t.names():
        lab = t.label(n)
        if lab not in a.letters:
            raise AutomatonError(f"tree letter {lab} missing from the automaton alphabet")
        if a.letters[lab] != len(t.children(n)):
            raise AutomatonError(f"rank mismatch on {lab}")
    start = (t.root, a.init)
    seen = {start}
    order = [start]
    moves = {}
    i = 0
    while i < len(order):
        name, q = order[i]
        i += 1
        lab = t.label(name)
        out = []
        for d in a.moves(q, lab):
            triples = []
            for direction, act, q2 in d:
                nxt = name if direction == STAY else t.child(name, direction - 1)
                pos = (nxt, q2)
                triples.append((act, pos))
                if pos not in seen:
                    seen.add(pos)
                    order.append(pos)
            out.append(triples)
        moves[(name, q)] = out
    return GameArena(a, t, order, moves)


def _counter_game(start, expand, priority_of, cap, counters):
    """Explicit game over (position, counters); `expand(pos)` yields disjuncts of
    (action, next position or the markers "WIN"/"LOSE"/"UNKNOWN")."""
    g = Game()
    win = g.add(0, 0, "WIN")
    g.succ[win].append(win)
    lose = g.add(0, 1, "LOSE")
    g.succ[lose].append(lose)
    ids = {}
    todo = []

    def node(pos, ctr):
        if pos == "WIN":
            return win
        if pos == "LOSE":
            return lose
        key = (pos, ctr)
        if key not in ids:
            ids[key] = g.add(0, priority_of(pos), key)
            todo.append(key)
        return ids[key]

    root = node(start, (0,) * counters)
    unknown = None
    while todo:
        pos, ctr = todo.pop()
        v = ids[(pos, ctr)]
        disjuncts = list(expand(pos))
        if not disjuncts:
            g.succ[v].append(lose)
        for d in disjuncts:
            if not d:
                g.succ[v].append(win)
                continue
            m = g.add(1, 0, ("choice", pos, ctr))
            g.succ[v].append(m)
            for act, nxt in d:
                if nxt == "UNKNOWN":
                    if unknown is None:
                        unknown = g.add(0, 0, "UNKNOWN")
                        g.succ[unknown].append(unknown)
                    g.succ[m].append(unknown)
                    continue
                new = apply_action(act, ctr, cap) if counters else ()
                g.succ[m].append(lose if new is None else node(nxt, new))
    return g, root, unknown, len(ids)


def n_wins(arena, n):
    """Eve wins the game keeping every counter at most n."""
    a = arena.automaton

    def expand(pos):
        return arena.moves[pos]

    g, root, _, _ = _counter_game(arena.positions[0], expand,
                                  lambda pos: a.priority[pos[1]], n, a.counters)
    eve, _ = solve_parity(g)
    return root in eve


@dataclass
class Verdict:
    kind: str  # "accepted", "rejected" or "unknown"
    n: int = None
    note: str = ""

    def __str__(self):
        if self.kind == "accepted":
            return f"accepted_at {self.n}"
        if self.kind == "rejected":
            return f"rejected_up_to {self.n}"
        return f"unknown ({self.note})" if self.note else "unknown"


def _two_way_game(a, t, n, window):
    """Game over path windows; leaving a truncated window upward is UNKNOWN."""
    def expand(pos):
        path, trunc, q = pos
        name = path[-1]
        at_root = len(path) == 1 and not trunc
        out = []
        for d in a.moves(q, t.label(name)):
            if at_root and any(x[0] == UP for x in d):
                continue
            triples = []
            for direction, act, q2 in d:
                if direction == STAY:
                    triples.append((act, (path, trunc, q2)))
                elif direction == UP:
                    if len(path) > 1:
                        triples.append((act, (path[:-1], trunc, q2)))
                    else:
                        triples.append((act, "UNKNOWN"))
                else:
                    p2 = path + (t.child(name, direction - 1),)
                    tr = trunc
                    if len(p2) > window:
                        p2, tr = p2[1:], True
                    triples.append((act, (p2, tr, q2)))
            out.append(triples)
        return out

    start = ((t.root,), False, a.init)
    return _counter_game(start, expand, lambda pos: a.priority[pos[2]], n, a.counters)


def two_way_wins(a, t, n, fuel=20000, max_window=64):
    """Three-valued n-win check for a two-way automaton: True, False or None."""
    window = 1
    while window <= max_window:
        g, root, unknown, size = _two_way_game(a, t, n, window)
        if size > fuel:
            return None
        if unknown is None:
            eve, _ = solve_parity(g)
            return root in eve
        g.priority[unknown] = 1
        eve, _ = solve_parity(g)
        if root in eve:
            return True
        g.priority[unknown] = 0
        eve, _ = solve_parity(g)
        if root not in eve:
            return False
        window += 1
    return None


def accepts_bounded(a, t, n_max=6, fuel=20000):
    """Search n = 0..n_max; exact for one-way automata, three-valued otherwise."""
    if isinstance(t, Tree):
        t = RegularTree.from_tree(t)
    if a.one_way():
        arena = build_arena(a, t)
        for n in range(n_max + 1):
            if n_wins(arena, n):
                return Verdict("accepted", n)
        return Verdict("rejected", n_max)
    undecided = []
    for n in range(n_max + 1):
        r = two_way_wins(a, t, n, fuel)
        if r is True:
            note = f"undecided below at {undecided}" if undecided else ""
            return Verdict("accepted", n, note)
        if r is None:
            undecided.append(n)
    if undecided:
        return Verdict("unknown", None, f"undecided for n in {undecided} within fuel {fuel}")
    return Verdict("rejected", n_max)
