"""Simple tree regular expressions for downward-closed tree languages.

Syntax (one of several equivalent spellings is accepted by the parser):

    S ::= 0 | P + ... + P          sums of pre-products
    P ::= a?(S, ..., S)            optional letter
        | {C + ... + C}*.S         iteration; `(C + C)*.S` also parses
    C ::= a(S or #, ...)           contexts, `#` is the hole

Every child of an optional letter or a context is stored as a `Sum`, so a
pure product is simply an expression whose sums are all singletons.
"""

import functools
import itertools
import re
from dataclasses import dataclass

from . import fta
from .fta import EpsBuilder, Nfta
from .trees import HOLE, Tree, merge_letters


class StreError(ValueError):
    pass


@dataclass(frozen=True)
class Sum:
    items: tuple = ()

    def __str__(self):
        return show(self)


@dataclass(frozen=True)
class Opt:
    letter: str
    args: tuple = ()

    def __str__(self):
        return show(self)


@dataclass(frozen=True)
class Ctx:
    letter: str
    args: tuple = ()

    def __str__(self):
        return show(self)


@dataclass(frozen=True)
class Star:
    contexts: tuple
    body: Sum

    def __str__(self):
        return show(self)


class _Hole:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "HOLE"

    def __str__(self):
        return HOLE

    def __reduce__(self):
        return (_Hole, ())


HOLE_ARG = _Hole()
ZERO = Sum(())


def single(p):
    return Sum((p,))


def opt(letter, *args):
    """Convenience: children may be pre-products or sums."""
    return Opt(letter, tuple(a if isinstance(a, Sum) else single(a) for a in args))


def ctx(letter, *args):
    return Ctx(letter, tuple(a if a is HOLE_ARG or isinstance(a, Sum) else single(a) for a in args))


def star(contexts, body):
    if not isinstance(body, Sum):
        body = single(body)
    return Star(tuple(contexts), body)


# ---------------------------------------------------------------- printing

def show(e):
    if isinstance(e, Sum):
        return " + ".join(show(p) for p in e.items) if e.items else "0"
    if isinstance(e, Opt):
        return f"{e.letter}?({', '.join(show(a) for a in e.args)})"
    if isinstance(e, Ctx):
        return f"{e.letter}({', '.join(show(a) for a in e.args)})"
    if isinstance(e, Star):
        body = e.body
        if len(body.items) == 1:
            b = show(body.items[0])
        elif not body.items:
            b = "0"
        else:
            b = f"({show(body)})"
        return "{" + " + ".join(show(c) for c in e.contexts) + "}*." + b
    if e is HOLE_ARG:
        return HOLE
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------- parsing

_TOK = re.compile(r"\s*([A-Za-z0-9_']+|[#?(){}*.+,])")


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _TOK.match(text, pos)
            if not m:
                raise StreError(f"unexpected character {text[pos]!r} at offset {pos}")
            self.toks.append(m.group(1))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self):
        t = self.peek()
        if t is None:
            raise StreError(f"unexpected end of input in {self.text!r}")
        self.i += 1
        return t

    def expect(self, tok):
        t = self.next()
        if t != tok:
            raise StreError(f"expected {tok!r}, got {t!r} in {self.text!r}")

    def sum(self):
        elems = self.elem()
        while self.peek() == "+":
            self.next()
            elems += self.elem()
        return elems

    def elem(self):
        t = self.next()
        if t == "0":
            if self.peek() == "*":
                return self.iterate([])
            return []
        if t == "#":
            return [HOLE_ARG]
        if t in "({":
            close = ")" if t == "(" else "}"
            if self.peek() == close:
                inner = []
            else:
                inner = self.sum()
            self.expect(close)
            if self.peek() == "*":
                return self.iterate(inner)
            if t == "{":
                raise StreError("an iterator in braces must be followed by `*.`")
            return inner
        if not re.fullmatch(r"[A-Za-z0-9_']+", t):
            raise StreError(f"unexpected {t!r} in {self.text!r}")
        if self.peek() == "?":
            self.next()
            return [Opt(t, tuple(_as_sum(a) for a in self.args()))]
        if self.peek() == "(":
            return [Ctx(t, tuple(_as_arg(a) for a in self.args()))]
        # a bare letter is read as a rank-0 context; it is only legal inside iterators
        return [Ctx(t, ())]

    def iterate(self, contexts):
        self.expect("*")
        self.expect(".")
        body = self.elem()
        return [Star(tuple(_as_ctx(e) for e in contexts), _as_sum(body))]

    def args(self):
        self.expect("(")
        out = []
        if self.peek() == ")":
            self.next()
            return out
        out.append(self.sum())
        while self.peek() == ",":
            self.next()
            out.append(self.sum())
        self.expect(")")
        return out


def _as_sum(elems):
    for e in elems:
        if not isinstance(e, (Opt, Star)):
            raise StreError(f"{show(e)} is not a pre-product (use `a?(...)` outside iterators)")
    return Sum(tuple(elems))


def _as_arg(elems):
    if len(elems) == 1 and elems[0] is HOLE_ARG:
        return HOLE_ARG
    return _as_sum(elems)


def _as_ctx(e):
    if not isinstance(e, Ctx):
        raise StreError(f"{show(e)} is not a context")
    return e


def parse(text):
    """Parse a sum; use `parse_product` when a single pre-product is expected."""
    p = _Parser(text)
    elems = p.sum()
    if p.peek() is not None:
        raise StreError(f"trailing input {p.peek()!r} in {text!r}")
    s = _as_sum(elems)
    letters(s)
    return s


def parse_product(text):
    s = parse(text)
    if len(s.items) != 1:
        raise StreError(f"expected a single product, got {len(s.items)} summands")
    return s.items[0]


def parse_context(text):
    p = _Parser(text)
    elems = p.sum()
    if len(elems) != 1 or p.peek() is not None:
        raise StreError(f"expected one context in {text!r}")
    return _as_ctx(elems[0])


# ---------------------------------------------------------------- structure

def children(e):
    if isinstance(e, Sum):
        return e.items
    if isinstance(e, (Opt, Ctx)):
        return tuple(a for a in e.args if a is not HOLE_ARG)
    if isinstance(e, Star):
        return e.contexts + (e.body,)
    return ()


def walk(e):
    """Pre-order traversal, left to right."""
    yield e
    for c in children(e):
        yield from walk(c)


def letters(e):
    """Letter -> rank map; raises on inconsistent ranks."""
    out = {}
    for x in walk(e):
        if isinstance(x, (Opt, Ctx)):
            out = merge_letters(out, {x.letter: len(x.args)})
    return out


def size(e):
    """Node count of the syntax tree (holes count one)."""
    if e is HOLE_ARG:
        return 1
    if isinstance(e, Sum):
        return sum(size(p) for p in e.items) if e.items else 1
    if isinstance(e, (Opt, Ctx)):
        return 1 + sum(size(a) for a in e.args)
    return 1 + sum(size(c) for c in e.contexts) + size(e.body)


def has_hole(c):
    return any(a is HOLE_ARG for a in c.args)


def is_linear(contexts):
    return all(sum(a is HOLE_ARG for a in c.args) <= 1 for c in contexts)


def is_full_context(c):
    return len(c.args) >= 1 and all(a is HOLE_ARG for a in c.args)


def is_full(contexts):
    return all(is_full_context(c) for c in contexts)


@functools.lru_cache(maxsize=None)
def nonempty(e):
    """Whether the denotation is nonempty, decided syntactically."""
    if isinstance(e, Sum):
        return any(nonempty(p) for p in e.items)
    if isinstance(e, (Opt, Ctx)):
        return all(a is HOLE_ARG or nonempty(a) for a in e.args)
    if isinstance(e, Star):
        if nonempty(e.body):
            return True
        # a hole-free context member exists when some context is not full
        return any(nonempty(c) and not is_full_context(c) for c in e.contexts)
    raise TypeError(e)


# ---------------------------------------------------------------- semantics

class _Compiler:
    def __init__(self):
        self.b = EpsBuilder()
        self.memo = {}
        self.dead = self.b.fresh("dead")

    def sum(self, s):
        key = ("sum", s)
        if key not in self.memo:
            q = self.b.fresh("sum")
            self.memo[key] = q
            for p in s.items:
                self.b.link(self.pre(p), q)
        return self.memo[key]

    def pre(self, p):
        key = ("pre", p)
        if key in self.memo:
            return self.memo[key]
        if isinstance(p, Opt):
            if not nonempty(p):
                q = self.dead
            else:
                q = self.b.fresh("opt")
                kids = [self.sum(a) for a in p.args]
                self.b.add(p.letter, kids, q)
                for k in kids:
                    self.b.link(k, q)
        else:
            q = self.b.fresh("star")
            self.b.link(self.sum(p.body), q)
            for c in p.contexts:
                self.b.link(self.context(c, q), q)
        self.memo[key] = q
        return q

    def context(self, c, hole_state):
        if not nonempty(c):
            return self.dead
        q = self.b.fresh("ctx")
        kids = [hole_state if a is HOLE_ARG else self.sum(a) for a in c.args]
        self.b.add(c.letter, kids, q)
        for k in kids:
            self.b.link(k, q)
        return q

    def hole(self):
        h = self.b.fresh("hole")
        self.b.add(HOLE, (), h)
        return h


@functools.lru_cache(maxsize=4096)
def to_nfta(e):
    """Automaton for the denotation of a sum or pre-product (letters of e only)."""
    if isinstance(e, (Opt, Star)):
        e = single(e)
    c = _Compiler()
    root = c.sum(e)
    return c.b.build([root], letters=letters(e)).renumber()


@functools.lru_cache(maxsize=4096)
def context_nfta(c):
    """Automaton for the denotation of a context, holes read as the letter `#`."""
    comp = _Compiler()
    q = comp.context(c, comp.hole())
    return comp.b.build([q], letters=merge_letters(letters(c), {HOLE: 0})).renumber()


def member(tree, e):
    return to_nfta(e).member(tree)


@functools.lru_cache(maxsize=65536)
def stre_includes(small, big):
    """Denotation of `small` contained in that of `big`."""
    return fta.includes(to_nfta(big), to_nfta(small))


@functools.lru_cache(maxsize=65536)
def context_includes(small, big):
    return fta.includes(context_nfta(big), context_nfta(small))


def equivalent(a, b):
    return stre_includes(a, b) and stre_includes(b, a)


# ---------------------------------------------------------------- rewriting

def _splits(items):
    """Ways to write a sum of >= 2 summands as S + S' (one summand against the rest)."""
    for i in range(len(items)):
        yield (items[i],), items[:i] + items[i + 1:]


def steps(s):
    """All one-step rewrites of a sum, as (rule number, result)."""
    yield from _sum_steps(s)


def _sum_steps(s):
    items = s.items
    for i, p in enumerate(items):
        for r, repl in _pre_steps(p):
            yield r, Sum(items[:i] + tuple(repl) + items[i + 1:])
    for i, j in itertools.permutations(range(len(items)), 2):
        if stre_includes(items[i], items[j]):
            yield 1, Sum(items[:i] + items[i + 1:])


def _arg_steps(args, rebuild, zero_rule, split_rule):
    """Rules on the children of an optional letter or a context."""
    for k, a in enumerate(args):
        if a is HOLE_ARG:
            continue
        if not a.items:
            yield zero_rule, ()
        if len(a.items) >= 2:
            for left, right in _splits(a.items):
                yield split_rule, (rebuild(args[:k] + (Sum(left),) + args[k + 1:]),
                                   rebuild(args[:k] + (Sum(right),) + args[k + 1:]))
        for r, new in _sum_steps(a):
            yield r, (rebuild(args[:k] + (new,) + args[k + 1:]),)


def _pre_steps(p):
    if isinstance(p, Opt):
        yield from _arg_steps(p.args, lambda a: Opt(p.letter, a), 4, 8)
        return
    I, body = p.contexts, p.body
    if not I:
        yield 3, body.items
    if is_full(I) and not body.items:
        yield 6, ()
    for i, c in enumerate(I):
        if not has_hole(c):
            yield 7, (Star(I[:i] + I[i + 1:], Sum(body.items + (Opt(c.letter, c.args),))),)
    if I and is_linear(I) and len(body.items) >= 2:
        for left, right in _splits(body.items):
            yield 10, (Star(I, Sum(left)), Star(I, Sum(right)))
    for i, c in enumerate(I):
        for r, repl in _arg_steps(c.args, lambda a, c=c: Ctx(c.letter, a), 5, 9):
            yield r, (Star(I[:i] + tuple(repl) + I[i + 1:], body),)
    for i, j in itertools.permutations(range(len(I)), 2):
        if context_includes(I[i], I[j]):
            yield 2, (Star(I[:i] + I[i + 1:], body),)
    for r, new in _sum_steps(body):
        yield r, (Star(I, new),)


def is_irreducible(s):
    if not isinstance(s, Sum):
        s = single(s)
    return next(steps(s), None) is None


def _absorb(items, incl):
    """Drop summands contained in another one; keeps the first of equals."""
    kept = list(dict.fromkeys(items))
    i = 0
    while i < len(kept):
        if any(j != i and incl(kept[i], kept[j]) for j in range(len(kept))):
            del kept[i]
            i = 0
        else:
            i += 1
    return tuple(kept)


def normalize(s):
    """A sum of products equivalent to s (a normal form for the rewrite rules)."""
    if not isinstance(s, Sum):
        s = single(s)
    return _norm_sum(s)


@functools.lru_cache(maxsize=None)
def _norm_sum(s):
    items = []
    for p in s.items:
        items.extend(_norm_pre(p))
    return Sum(_absorb(items, stre_includes))


def _distribute(args):
    """Normalized argument sums -> list of argument tuples with single products, or []."""
    options = []
    for a in args:
        if a is HOLE_ARG:
            options.append([HOLE_ARG])
            continue
        n = _norm_sum(a)
        if not n.items:
            return []
        options.append([single(p) for p in n.items])
    return [tuple(c) for c in itertools.product(*options)]


@functools.lru_cache(maxsize=None)
def _norm_pre(p):
    if isinstance(p, Opt):
        return tuple(Opt(p.letter, a) for a in _distribute(p.args))
    contexts = []
    for c in p.contexts:
        contexts.extend(Ctx(c.letter, a) for a in _distribute(c.args))
    contexts = list(_absorb(contexts, context_includes))
    body = _norm_sum(p.body).items
    moved = [c for c in contexts if not has_hole(c)]
    if moved:
        contexts = [c for c in contexts if has_hole(c)]
        body = _norm_sum(Sum(body + tuple(Opt(c.letter, c.args) for c in moved))).items
    if not contexts:
        return body
    contexts = tuple(contexts)
    if is_full(contexts) and not body:
        return ()
    if is_linear(contexts) and len(body) >= 2:
        return tuple(Star(contexts, single(q)) for q in body)
    return (Star(contexts, Sum(body)),)


# ---------------------------------------------------------------- pure products

def is_pure(p):
    if isinstance(p, Opt):
        return all(len(a.items) == 1 and is_pure(a.items[0]) for a in p.args)
    if isinstance(p, Star):
        if not p.contexts or len(p.body.items) != 1 or not is_pure(p.body.items[0]):
            return False
        for c in p.contexts:
            if not has_hole(c):
                return False
            for a in c.args:
                if a is not HOLE_ARG and not (len(a.items) == 1 and is_pure(a.items[0])):
                    return False
        return True
    return False


def _one(a):
    if len(a.items) != 1:
        raise StreError(f"not a product: the child `{show(a)}` is not a single product")
    return a.items[0]


def to_pure_product(p):
    """Equivalent pure product of a product (an irreducible pre-product)."""
    if isinstance(p, Sum):
        p = _one(p)
    if isinstance(p, Opt):
        return Opt(p.letter, tuple(single(to_pure_product(_one(a))) for a in p.args))
    if not p.contexts:
        raise StreError("not a product: empty iterator")
    contexts = []
    for c in p.contexts:
        if not has_hole(c):
            raise StreError(f"not a product: hole-free context {show(c)}")
        contexts.append(Ctx(c.letter, tuple(
            a if a is HOLE_ARG else single(to_pure_product(_one(a))) for a in c.args)))
    contexts = tuple(contexts)
    body = [to_pure_product(q) for q in p.body.items]
    if len(body) == 1:
        return Star(contexts, single(body[0]))
    if not body:
        for c in contexts:
            if not is_full_context(c):
                j = next(a for a in c.args if a is not HOLE_ARG)
                return Star(contexts, j)
        raise StreError("not a product: full iterator over 0")
    wide = next((c for c in contexts if sum(a is HOLE_ARG for a in c.args) >= 2), None)
    if wide is None:
        raise StreError("not a product: linear iterator over a sum")
    holes_at = [i for i, a in enumerate(wide.args) if a is HOLE_ARG]
    r = None
    for q in body:
        args = list(wide.args)
        for n, i in enumerate(holes_at):
            args[i] = single(r) if (n == 0 and r is not None) else single(q)
        r = Opt(wide.letter, tuple(args))
    return Star(contexts, single(r))


def pure_products(s):
    """Normalize a sum and convert each product; the union equals s."""
    return [to_pure_product(p) for p in normalize(s).items]


def root(p):
    """Label at the root of every versatile tree of p."""
    if isinstance(p, Sum):
        p = _one(p)
    if isinstance(p, Opt):
        return p.letter
    return p.contexts[0].letter


def stars(p):
    """All iteration subexpressions of p, pre-order."""
    return [x for x in walk(p) if isinstance(x, Star)]


def large_pairs(p):
    """(root of I*.P', root of P') for every iteration subexpression."""
    return [(root(s), root(s.body)) for s in stars(p)]


def is_diversified(p):
    seen = set()
    for x in walk(p):
        if isinstance(x, (Opt, Ctx)):
            if x.letter in seen:
                return False
            seen.add(x.letter)
    return True


def diversify(p):
    """Rename each letter occurrence a to a fresh a_i; returns (P', marked -> original)."""
    counts = {}
    marks = {}

    def fresh(a):
        counts[a] = counts.get(a, 0) + 1
        m = f"{a}_{counts[a]}"
        marks[m] = a
        return m

    def go(e):
        if e is HOLE_ARG:
            return e
        if isinstance(e, Sum):
            return Sum(tuple(go(x) for x in e.items))
        if isinstance(e, (Opt, Ctx)):
            name = fresh(e.letter)
            return type(e)(name, tuple(go(a) for a in e.args))
        cs = tuple(go(c) for c in e.contexts)
        return Star(cs, go(e.body))

    return go(p), marks


def rename(e, f):
    """Apply a letter renaming everywhere."""
    if e is HOLE_ARG:
        return e
    if isinstance(e, Sum):
        return Sum(tuple(rename(x, f) for x in e.items))
    if isinstance(e, (Opt, Ctx)):
        return type(e)(f(e.letter), tuple(rename(a, f) for a in e.args))
    return Star(tuple(rename(c, f) for c in e.contexts), rename(e.body, f))


def unmark(e, marks):
    return rename(e, lambda a: marks.get(a, a))


# ---------------------------------------------------------------- versatile trees

class _CtCompiler:
    def __init__(self):
        self.b = EpsBuilder()

    def pre(self, p):
        if isinstance(p, Sum):
            p = _one(p)
        if isinstance(p, Opt):
            q = self.b.fresh("ct")
            self.b.add(p.letter, [self.pre(a) for a in p.args], q)
            return q
        loop = self.b.fresh("more")
        first = self.rounds(p.contexts, loop)
        self.b.link(self.pre(p.body), loop)
        self.b.link(first, loop)
        return first

    def rounds(self, contexts, after):
        """States R_1..R_k: context j with its holes filled by R_{j+1}, R_{k+1} = after."""
        nxt = after
        for c in reversed(contexts):
            q = self.b.fresh("round")
            self.b.add(c.letter, [nxt if a is HOLE_ARG else self.pre(a) for a in c.args], q)
            nxt = q
        return nxt


@functools.lru_cache(maxsize=1024)
def versatile_nfta(p):
    """Automaton for the versatile trees CT(p) of a pure product."""
    if not is_pure(p):
        raise StreError(f"not a pure product: {show(p)}")
    c = _CtCompiler()
    q = c.pre(p)
    return c.b.build([q], letters=letters(p)).renumber()


def versatile_iterator_nfta(contexts):
    """CT of an iterator alone, holes read as `#`."""
    c = _CtCompiler()
    h = c.b.fresh("hole")
    c.b.add(HOLE, (), h)
    q = c.rounds(tuple(contexts), h)
    lets = merge_letters({HOLE: 0}, *[letters(x) for x in contexts])
    return c.b.build([q], letters=lets).renumber()


def versatile_tree(p, n):
    """The versatile tree of p where every iterator runs max(n, 1) rounds on every hole."""
    rounds = max(n, 1)

    def pre(e):
        if isinstance(e, Sum):
            e = _one(e)
        if isinstance(e, Opt):
            return Tree(e.letter, [pre(a) for a in e.args])
        inner = pre(e.body)

        def level(k):
            if k == rounds:
                return inner
            return fill(0, k)

        def fill(j, k):
            c = e.contexts[j]
            kids = []
            for a in c.args:
                if a is HOLE_ARG:
                    kids.append(fill(j + 1, k) if j + 1 < len(e.contexts) else level(k + 1))
                else:
                    kids.append(pre(a))
            return Tree(c.letter, kids)

        return level(0)

    return pre(p)


def is_n_large_wrt(t, p, n):
    """Every occurrence of root(P') has >= n proper ancestors labeled root(I*.P')."""
    if n <= 0:
        return True
    pairs = large_pairs(p)
    if not pairs:
        return True

    def go(node, counts):
        for k, (b, c) in enumerate(pairs):
            if node.label == c and counts[k] < n:
                return False
        below = tuple(x + (node.label == b) for x, (b, _) in zip(counts, pairs))
        return all(go(ch, below) for ch in node.children)

    return go(t, tuple(0 for _ in pairs))


# ---------------------------------------------------------------- random generation

def random_stre(rng, alphabet, depth=3, max_sum=2):
    """A random sum over `alphabet` (letter -> rank); may contain 0 and holes."""

    def s(d):
        k = rng.randint(0, max_sum) if d > 0 else rng.randint(0, 1)
        return Sum(tuple(pre(d) for _ in range(k)))

    def pre(d):
        if d <= 0 or rng.random() < 0.55:
            a = rng.choice(sorted(alphabet))
            return Opt(a, tuple(s(d - 1) for _ in range(alphabet[a])))
        k = rng.randint(0, 2)
        return Star(tuple(context(d - 1) for _ in range(k)), s(d - 1))

    def context(d):
        a = rng.choice(sorted(alphabet))
        return Ctx(a, tuple(HOLE_ARG if rng.random() < 0.5 else s(d) for _ in range(alphabet[a])))

    return s(depth)


def random_pure_product(rng, alphabet, depth=3, max_contexts=2):
    """A random pure product; `alphabet` needs a rank-0 letter and a letter of rank >= 1."""
    leaves = sorted(a for a, r in alphabet.items() if r == 0)
    inner = sorted(a for a, r in alphabet.items() if r >= 1)

    def pre(d):
        if d <= 0 or not inner:
            return Opt(rng.choice(leaves), ())
        if rng.random() < 0.5:
            a = rng.choice(sorted(alphabet))
            return Opt(a, tuple(single(pre(d - 1)) for _ in range(alphabet[a])))
        cs = tuple(context(d - 1) for _ in range(rng.randint(1, max_contexts)))
        return Star(cs, single(pre(d - 1)))

    def context(d):
        a = rng.choice(inner)
        r = alphabet[a]
        forced = rng.randrange(r)
        args = []
        for i in range(r):
            if i == forced or rng.random() < 0.4:
                args.append(HOLE_ARG)
            else:
                args.append(single(pre(min(d, 1))))
        return Ctx(a, tuple(args))

    return pre(depth)
