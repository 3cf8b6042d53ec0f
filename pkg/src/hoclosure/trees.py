"""Ranked alphabets, finite trees, contexts, regular trees and the embedding order."""

import itertools
import re

HOLE = "#"
BOT = "bot"
UNKNOWN = "unknown"
ND = "nd"


class AlphabetError(ValueError):
    pass


class RankedAlphabet:
    """Letter -> rank map with optional nondeterminism and bottom letters."""

    def __init__(self, letters, nd=None, bot=None):
        self.letters = dict(letters)
        for name, r in self.letters.items():
            if not isinstance(r, int) or r < 0:
                raise AlphabetError(f"bad rank for {name}: {r!r}")
        if nd is not None and self.letters.get(nd) != 2:
            raise AlphabetError(f"nondeterminism letter {nd} must have rank 2")
        if bot is not None and self.letters.get(bot) != 0:
            raise AlphabetError(f"bottom letter {bot} must have rank 0")
        self.nd = nd
        self.bot = bot

    @classmethod
    def parse(cls, text):
        """`a/2 nd/2 c/0`; nd and bot are picked up by name when present."""
        letters = {}
        for tok in text.split():
            name, _, r = tok.partition("/")
            if not r:
                raise AlphabetError(f"missing rank in {tok!r}")
            if name in letters:
                raise AlphabetError(f"duplicate letter {name}")
            letters[name] = int(r)
        nd = ND if letters.get(ND) == 2 else None
        bot = BOT if letters.get(BOT) == 0 else None
        return cls(letters, nd=nd, bot=bot)

    def rank(self, name):
        try:
            return self.letters[name]
        except KeyError:
            raise AlphabetError(f"unknown letter {name}") from None

    def __contains__(self, name):
        return name in self.letters

    def __iter__(self):
        return iter(sorted(self.letters))

    def __eq__(self, other):
        return isinstance(other, RankedAlphabet) and self.letters == other.letters

    def __hash__(self):
        return hash(frozenset(self.letters.items()))

    def with_hole(self):
        return self.extended({HOLE: 0})

    def extended(self, extra):
        merged = merge_letters(self.letters, extra)
        return RankedAlphabet(merged, nd=self.nd, bot=self.bot)

    def check(self, tree):
        for node in tree.nodes():
            if self.rank(node.label) != len(node.children):
                raise AlphabetError(
                    f"{node.label} has {len(node.children)} children, rank is {self.rank(node.label)}")

    def __str__(self):
        return " ".join(f"{a}/{r}" for a, r in sorted(self.letters.items()))

    __repr__ = __str__


def merge_letters(*maps):
    out = {}
    for m in maps:
        for a, r in m.items():
            if out.get(a, r) != r:
                raise AlphabetError(f"letter {a} used with ranks {out[a]} and {r}")
            out[a] = r
    return out


class Tree:
    """Immutable finite ranked tree. Hash is cached, equality is structural."""

    __slots__ = ("label", "children", "_hash", "_size")

    def __init__(self, label, children=()):
        self.label = label
        self.children = tuple(children)
        self._hash = None
        self._size = None

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.label, self.children))
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Tree) or hash(self) != hash(other):
            return False
        return self.label == other.label and self.children == other.children

    def __lt__(self, other):
        return sort_key(self) < sort_key(other)

    @property
    def rank(self):
        return len(self.children)

    def size(self):
        if self._size is None:
            self._size = 1 + sum(c.size() for c in self.children)
        return self._size

    def depth(self):
        return 1 + max((c.depth() for c in self.children), default=0)

    def nodes(self):
        stack = [self]
        while stack:
            t = stack.pop()
            yield t
            stack.extend(reversed(t.children))

    def labels(self):
        return {t.label for t in self.nodes()}

    def letters(self):
        out = {}
        for t in self.nodes():
            out = merge_letters(out, {t.label: len(t.children)})
        return out

    def count(self, label):
        return sum(1 for t in self.nodes() if t.label == label)

    def at(self, path):
        t = self
        for i in path:
            t = t.children[i]
        return t

    def positions(self, path=()):
        yield path, self
        for i, c in enumerate(self.children):
            yield from c.positions(path + (i,))

    def branches(self):
        """Label sequences from the root to each leaf."""
        if not self.children:
            yield (self.label,)
            return
        for c in self.children:
            for b in c.branches():
                yield (self.label,) + b

    def relabel(self, f):
        return Tree(f(self.label), [c.relabel(f) for c in self.children])

    def __str__(self):
        if not self.children:
            return self.label
        return f"{self.label}({','.join(str(c) for c in self.children)})"

    def __repr__(self):
        return f"Tree({str(self)!r})"


def sort_key(t):
    return (t.size(), str(t))


def leaf(name):
    return Tree(name)


_TOKEN = re.compile(r"\s*([A-Za-z0-9_'#]+|[(),])")


def _tokens(text):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"unexpected character at {pos} in {text!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def parse_tree(text, alphabet=None):
    """Parse `a(t1,...,tr)`; rank-0 letters may be written bare or as `c()`."""
    toks = _tokens(text)
    pos = 0

    def expect(tok):
        nonlocal pos
        if pos >= len(toks) or toks[pos] != tok:
            got = toks[pos] if pos < len(toks) else "end of input"
            raise ValueError(f"expected {tok!r}, got {got!r} in {text!r}")
        pos += 1

    def tree():
        nonlocal pos
        if pos >= len(toks) or toks[pos] in "(),":
            raise ValueError(f"expected a letter in {text!r}")
        label = toks[pos]
        pos += 1
        kids = []
        if pos < len(toks) and toks[pos] == "(":
            pos += 1
            if toks[pos] != ")":
                kids.append(tree())
                while toks[pos] == ",":
                    pos += 1
                    kids.append(tree())
            expect(")")
        return Tree(label, kids)

    t = tree()
    if pos != len(toks):
        raise ValueError(f"trailing input in {text!r}")
    if alphabet is not None:
        alphabet.check(t)
    return t


def holes(t):
    return t.count(HOLE)


def substitute(context, trees):
    """C[L]: every hole is replaced, independently, by some tree of `trees`."""
    trees = list(trees)
    if context.label == HOLE:
        return set(trees)
    if not context.children:
        return {context}
    options = [substitute(c, trees) for c in context.children]
    return {Tree(context.label, combo) for combo in itertools.product(*options)}


def embeds(s, t, alphabet=None):
    """True iff s homeomorphically embeds into t."""
    if alphabet is not None:
        alphabet.check(s)
        alphabet.check(t)
    else:
        merge_letters(s.letters(), t.letters())
    memo = {}

    def go(a, b):
        key = (id(a), id(b))
        hit = memo.get(key)
        if hit is not None:
            return hit
        res = False
        if a.size() <= b.size():
            if (a.label == b.label and len(a.children) == len(b.children)
                    and all(go(x, y) for x, y in zip(a.children, b.children))):
                res = True
            else:
                res = any(go(a, c) for c in b.children)
        memo[key] = res
        return res

    return go(s, t)


def downward_closure(trees):
    """All trees embedding into some member: brute force over subtree choices."""
    memo = {}

    def down(t):
        if t in memo:
            return memo[t]
        out = set()
        for c in t.children:
            out |= down(c)
        for combo in itertools.product(*[down(c) for c in t.children]):
            out.add(Tree(t.label, combo))
        memo[t] = out
        return out

    result = set()
    for t in trees:
        result |= down(t)
    return result


def branch_count_ok(t, letters, n):
    """Every letter of `letters` occurs at least n times on every branch of t."""
    letters = set(letters)
    if not letters or n <= 0:
        return True
    for branch in t.branches():
        for a in letters:
            if branch.count(a) < n:
                return False
    return True


def nd_resolutions(t, size_bound, nd=ND, bot=BOT):
    """Finite trees reachable by resolving nd choices, with at most size_bound nodes.

    Branches through `bot` or `unknown` leaves produce nothing.
    """
    memo = {}

    def res(node, budget):
        key = (id(node), budget)
        if key in memo:
            return memo[key]
        out = set()
        if budget <= 0 or node.label in (bot, UNKNOWN):
            pass
        elif node.label == nd and len(node.children) == 2:
            out = res(node.children[0], budget) | res(node.children[1], budget)
        else:
            out = _products(node.label, node.children, budget - 1, res)
        memo[key] = out
        return out

    return res(t, size_bound)


def _products(label, kids, budget, res):
    """All label(u1..ur) with sum of sizes <= budget, ui drawn from res(kid_i, .)."""
    if not kids:
        return {Tree(label)}
    # minimal sizes let us split the budget without enumerating hopeless splits
    partial = [((), 0)]
    for i, k in enumerate(kids):
        rest_min = len(kids) - i - 1
        nxt = []
        for prefix, used in partial:
            for u in res(k, budget - used - rest_min):
                nxt.append((prefix + (u,), used + u.size()))
        partial = nxt
        if not partial:
            return set()
    return {Tree(label, p) for p, used in partial if used <= budget}


def enumerate_trees(alphabet, max_size, letters=None):
    """Every tree over the alphabet with at most max_size nodes (test oracle)."""
    letters = sorted(letters if letters is not None else alphabet.letters)
    by_size = {}
    for s in range(1, max_size + 1):
        bucket = []
        for a in letters:
            r = alphabet.rank(a)
            if r == 0:
                if s == 1:
                    bucket.append(Tree(a))
                continue
            for split in _compositions(s - 1, r):
                for kids in itertools.product(*[by_size[k] for k in split]):
                    bucket.append(Tree(a, kids))
        by_size[s] = bucket
    return [t for s in range(1, max_size + 1) for t in by_size[s]]


def _compositions(total, parts):
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class RegularTree:
    """Equation system Name = letter(Name, ...) with a root name."""

    def __init__(self, equations, root):
        self.equations = {k: (v[0], tuple(v[1])) for k, v in equations.items()}
        self.root = root
        if root not in self.equations:
            raise ValueError(f"root {root} is not defined")
        for name, (_, kids) in self.equations.items():
            for k in kids:
                if k not in self.equations:
                    raise ValueError(f"{name} refers to undefined {k}")

    @classmethod
    def parse(cls, text, alphabet=None):
        root, eqs = None, {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("--")[0].strip()
            if not line:
                continue
            if line.startswith("root "):
                root = line.split()[1]
                continue
            m = re.fullmatch(r"([A-Za-z0-9_']+)\s*=\s*([A-Za-z0-9_'#]+)\s*(?:\((.*)\))?", line)
            if not m:
                raise ValueError(f"line {lineno}: cannot parse {raw!r}")
            kids = [k.strip() for k in m.group(3).split(",")] if m.group(3) else []
            if m.group(1) in eqs:
                raise ValueError(f"line {lineno}: {m.group(1)} defined twice")
            eqs[m.group(1)] = (m.group(2), kids)
        if root is None:
            raise ValueError("missing `root Name` line")
        rt = cls(eqs, root)
        if alphabet is not None:
            rt.check(alphabet)
        return rt

    def check(self, alphabet):
        for name, (a, kids) in self.equations.items():
            if alphabet.rank(a) != len(kids):
                raise AlphabetError(f"{name}: {a} has {len(kids)} children, rank is {alphabet.rank(a)}")

    def label(self, name):
        return self.equations[name][0]

    def child(self, name, i):
        return self.equations[name][1][i]

    def children(self, name):
        return self.equations[name][1]

    def names(self):
        return sorted(self.equations)

    def letters(self):
        return merge_letters(*[{a: len(k)} for a, k in self.equations.values()])

    def unfold(self, depth, name=None):
        """Finite prefix; nodes at the cut become `unknown`."""
        name = self.root if name is None else name
        if depth <= 0:
            return Tree(UNKNOWN)
        a, kids = self.equations[name]
        return Tree(a, [self.unfold(depth - 1, k) for k in kids])

    def resolutions(self, size_bound, nd=ND, bot=BOT):
        """NT of the infinite tree, restricted to size_bound (exact, no prefix).

        Least fixpoint over (name, budget); nd-cycles converge because
        budgets only shrink below letters.
        """
        table = {(n, b): set() for n in self.equations for b in range(size_bound + 1)}

        def look(name, budget):
            return table.get((name, budget), set()) if budget > 0 else set()

        changed = True
        while changed:
            changed = False
            for (name, budget) in list(table):
                a, kids = self.equations[name]
                if budget <= 0 or a == bot:
                    continue
                if a == nd and len(kids) == 2:
                    new = look(kids[0], budget) | look(kids[1], budget)
                else:
                    new = _products(a, kids, budget - 1, look)
                if new != table[(name, budget)]:
                    table[(name, budget)] = new
                    changed = True
        return table[(self.root, size_bound)] if size_bound > 0 else set()

    def to_text(self):
        lines = [f"root {self.root}"]
        for name in self.names():
            a, kids = self.equations[name]
            lines.append(f"{name} = {a}({','.join(kids)})" if kids else f"{name} = {a}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tree(cls, t):
        """Share equal subtrees of a finite tree."""
        names, eqs = {}, {}

        def go(u):
            if u in names:
                return names[u]
            kids = [go(c) for c in u.children]
            n = f"N{len(names)}"
            names[u] = n
            eqs[n] = (u.label, kids)
            return n

        root = go(t)
        return cls(eqs, root)
