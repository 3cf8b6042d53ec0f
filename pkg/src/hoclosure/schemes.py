"""Simple types, applicative lambda-terms, recursion schemes and their Böhm trees."""

import functools
import re
import sys
from dataclasses import dataclass, field

from .trees import (BOT, ND, UNKNOWN, RankedAlphabet, Tree, nd_resolutions,
                    AlphabetError)

# ---------------------------------------------------------------- types

O = "o"


@dataclass(frozen=True)
class Arrow:
    arg: object
    res: object

    def __str__(self):
        a = str(self.arg)
        if isinstance(self.arg, Arrow):
            a = f"({a})"
        return f"{a}->{self.res}"


def type_args(t):
    """Argument types of t, left to right."""
    out = []
    while isinstance(t, Arrow):
        out.append(t.arg)
        t = t.res
    return out


def arrow(args, res=O):
    for a in reversed(list(args)):
        res = Arrow(a, res)
    return res


def order(t):
    args = type_args(t)
    return 1 + max(order(a) for a in args) if args else 0


def is_homogeneous(t):
    args = type_args(t)
    ords = [order(a) for a in args]
    return all(x >= y for x, y in zip(ords, ords[1:])) and all(is_homogeneous(a) for a in args)


def letter_type(rank):
    return arrow([O] * rank)


def show_type(t):
    return str(t)


def parse_type(text):
    toks = re.findall(r"o|->|\(|\)", text.replace(" ", ""))
    if "".join(toks) != text.replace(" ", ""):
        raise SchemeError(f"bad type {text!r}")
    pos = 0

    def atom():
        nonlocal pos
        if pos < len(toks) and toks[pos] == "o":
            pos += 1
            return O
        if pos < len(toks) and toks[pos] == "(":
            pos += 1
            t = arr()
            if pos >= len(toks) or toks[pos] != ")":
                raise SchemeError(f"unbalanced type {text!r}")
            pos += 1
            return t
        raise SchemeError(f"bad type {text!r}")

    def arr():
        nonlocal pos
        left = atom()
        if pos < len(toks) and toks[pos] == "->":
            pos += 1
            return Arrow(left, arr())
        return left

    t = arr()
    if pos != len(toks):
        raise SchemeError(f"trailing input in type {text!r}")
    return t


# ---------------------------------------------------------------- terms

class SchemeError(ValueError):
    pass


@dataclass(frozen=True)
class Sym:
    name: str
    kind: str  # "letter", "nt" or "var"

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class App:
    fun: object
    arg: object

    def __str__(self):
        f = str(self.fun) if not isinstance(self.fun, Lam) else f"({self.fun})"
        a = str(self.arg) if isinstance(self.arg, Sym) else f"({self.arg})"
        return f"{f} {a}"


@dataclass(frozen=True)
class Lam:
    var: str
    vtype: object
    body: object

    def __str__(self):
        return f"\\{self.var}. {self.body}"


def spine(t):
    """Head and argument list of an application."""
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    return t, args[::-1]


def apply(head, args):
    for a in args:
        head = App(head, a)
    return head


@functools.lru_cache(maxsize=None)
def free_vars(t):
    if isinstance(t, Sym):
        return frozenset([t.name]) if t.kind == "var" else frozenset()
    if isinstance(t, App):
        return free_vars(t.fun) | free_vars(t.arg)
    return free_vars(t.body) - {t.var}


def subterms(t, path=()):
    yield path, t
    if isinstance(t, App):
        yield from subterms(t.fun, path + ("fun",))
        yield from subterms(t.arg, path + ("arg",))
    elif isinstance(t, Lam):
        yield from subterms(t.body, path + ("body",))


_TERM_TOK = re.compile(r"\s*(\\|\.|\(|\)|[A-Za-z0-9_'#]+)")


def parse_term(text, letters=(), nonterminals=(), var_types=None):
    """Juxtaposition application, parentheses, `\\x. M` binders.

    Names resolve to letters, then nonterminals, then variables.
    """
    var_types = var_types or {}
    toks, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TERM_TOK.match(text, pos)
        if not m:
            raise SchemeError(f"unexpected character {text[pos]!r} in {text!r}")
        toks.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    i = 0

    def peek():
        return toks[i] if i < len(toks) else None

    def expr():
        nonlocal i
        if peek() == "\\":
            i += 1
            name = toks[i]
            i += 1
            if peek() != ".":
                raise SchemeError(f"expected '.' after binder {name}")
            i += 1
            return Lam(name, var_types.get(name), expr())
        items = []
        while peek() not in (None, ")"):
            if peek() == "\\":
                items.append(expr())
                break
            items.append(atom())
        if not items:
            raise SchemeError(f"empty term in {text!r}")
        return apply(items[0], items[1:])

    def atom():
        nonlocal i
        tok = peek()
        if tok == "(":
            i += 1
            t = expr()
            if peek() != ")":
                raise SchemeError(f"missing ')' in {text!r}")
            i += 1
            return t
        if tok in (None, ")", ".", "\\"):
            raise SchemeError(f"unexpected {tok!r} in {text!r}")
        i += 1
        if tok in letters:
            return Sym(tok, "letter")
        if tok in nonterminals:
            return Sym(tok, "nt")
        return Sym(tok, "var")

    t = expr()
    if i != len(toks):
        raise SchemeError(f"trailing input in {text!r}")
    return t


# ---------------------------------------------------------------- schemes

@dataclass
class Rule:
    params: list
    body: object


@dataclass
class Scheme:
    alphabet: RankedAlphabet
    types: dict
    start: str
    rules: dict
    comments: list = field(default_factory=list)

    def param_types(self, name):
        return dict(zip(self.rules[name].params, type_args(self.types[name])))

    def as_lambda(self, name):
        r = self.rules[name]
        t = r.body
        for p, ty in reversed(list(zip(r.params, type_args(self.types[name])))):
            t = Lam(p, ty, t)
        return t

    # text format
    @classmethod
    def parse(cls, text):
        letters, types, start, rules, comments = None, {}, None, [], []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line, _, comment = raw.partition("--")
            line = line.strip()
            if comment.strip() and not line:
                comments.append(comment.strip())
            if not line:
                continue
            try:
                if line.startswith("letters "):
                    letters = RankedAlphabet.parse(line[len("letters "):])
                elif line.startswith("types "):
                    for decl in line[len("types "):].split(","):
                        name, _, ty = decl.partition(":")
                        types[name.strip()] = parse_type(ty.strip())
                elif line.startswith("start "):
                    start = line.split()[1]
                elif "=" in line:
                    lhs, _, rhs = line.partition("=")
                    names = lhs.split()
                    rules.append((lineno, names[0], names[1:], rhs))
                else:
                    raise SchemeError("expected letters/types/start or a rule")
            except (SchemeError, AlphabetError, IndexError) as e:
                raise SchemeError(f"line {lineno}: {e}") from None
        if letters is None:
            raise SchemeError("missing `letters` line")
        nts = {name for _, name, _, _ in rules}
        parsed = {}
        for lineno, name, params, rhs in rules:
            if name in parsed:
                raise SchemeError(f"line {lineno}: second rule for {name}")
            if name in letters:
                raise SchemeError(f"line {lineno}: {name} is a letter")
            if name not in types:
                types[name] = arrow([O] * len(params))
            try:
                body = parse_term(rhs, letters.letters, nts)
            except SchemeError as e:
                raise SchemeError(f"line {lineno}: {e}") from None
            parsed[name] = Rule(params, body)
        if start is None:
            start = rules[0][1] if rules else None
        if start not in parsed:
            raise SchemeError(f"start symbol {start} has no rule")
        return cls(letters, types, start, parsed, comments)

    def to_text(self):
        lines = [f"-- {c}" for c in self.comments]
        lines.append("letters " + " ".join(f"{a}/{r}" for a, r in sorted(self.alphabet.letters.items())))
        for name in self._order():
            if self.types[name] != O:
                lines.append(f"types {name} : {self.types[name]}")
        lines.append(f"start {self.start}")
        for name in self._order():
            r = self.rules[name]
            lines.append(" ".join([name] + list(r.params)) + " = " + str(r.body))
        return "\n".join(lines) + "\n"

    def _order(self):
        return [self.start] + sorted(n for n in self.rules if n != self.start)


# ---------------------------------------------------------------- typing

class TypeCheckError(SchemeError):
    pass


def type_of(term, letters, nt_types, env, out=None, path=()):
    """Type of `term`; records every subterm's type in `out` (keyed by id)."""
    if isinstance(term, Sym):
        if term.kind == "letter":
            t = letter_type(letters[term.name])
        elif term.kind == "nt":
            if term.name not in nt_types:
                raise TypeCheckError(f"{_p(path)}: unknown nonterminal {term.name}")
            t = nt_types[term.name]
        else:
            if term.name not in env:
                raise TypeCheckError(f"{_p(path)}: unbound variable {term.name}")
            t = env[term.name]
    elif isinstance(term, App):
        f = type_of(term.fun, letters, nt_types, env, out, path + ("fun",))
        a = type_of(term.arg, letters, nt_types, env, out, path + ("arg",))
        if not isinstance(f, Arrow):
            raise TypeCheckError(f"{_p(path)}: applying {term.fun} of type o")
        if f.arg != a:
            raise TypeCheckError(f"{_p(path)}: argument {term.arg} has type {a}, expected {f.arg}")
        t = f.res
    else:
        if term.vtype is None:
            raise TypeCheckError(f"{_p(path)}: binder {term.var} has no type")
        inner = dict(env)
        inner[term.var] = term.vtype
        t = Arrow(term.vtype, type_of(term.body, letters, nt_types, inner, out, path + ("body",)))
    if out is not None:
        out[id(term)] = t
    return t


def _p(path):
    return "/".join(path) if path else "<top>"


def typecheck(g):
    """Raise TypeCheckError unless every rule has its declared type. Returns subterm types."""
    out = {}
    letters = g.alphabet.letters
    for name, rule in g.rules.items():
        ty = g.types[name]
        args = type_args(ty)
        if len(rule.params) != len(args):
            raise TypeCheckError(f"{name}: {len(rule.params)} parameters for type {ty}")
        if len(set(rule.params)) != len(rule.params):
            raise TypeCheckError(f"{name}: repeated parameter")
        for p in rule.params:
            if p in letters or p in g.rules:
                raise TypeCheckError(f"{name}: parameter {p} shadows a letter or nonterminal")
        if isinstance(rule.body, Sym) and rule.body.kind == "nt":
            raise TypeCheckError(f"{name}: rule body is a bare nonterminal")
        for _, sub in subterms(rule.body):
            if isinstance(sub, Lam):
                raise TypeCheckError(f"{name}: rule body must be applicative")
        env = dict(zip(rule.params, args))
        t = type_of(rule.body, letters, g.types, env, out, (name,))
        if t != O:
            raise TypeCheckError(f"{name}: body has type {t}, expected o")
    return out


def scheme_order(g):
    return max(order(t) for t in g.types.values())


# ---------------------------------------------------------------- safety

@dataclass
class SafetyReport:
    verdict: bool
    path: tuple = ()
    variable: str = None

    def __str__(self):
        if self.verdict:
            return "safe"
        return f"unsafe: variable {self.variable} at {_p(self.path)}"


def _superficial(term, types, var_types):
    """A free variable violating ord(x) >= ord(term), or None."""
    o = order(types[id(term)])
    for x in sorted(free_vars(term)):
        if order(var_types[x]) < o:
            return x
    return None


def term_safety(term, letters, nt_types, var_types):
    """Safety of a single term; variables typed by `var_types` (binders included)."""
    types = {}
    env = {x: t for x, t in var_types.items()}
    type_of(term, letters, nt_types, env, types)
    allvars = dict(var_types)
    for _, sub in subterms(term):
        if isinstance(sub, Lam):
            allvars[sub.var] = sub.vtype
    bad = _superficial(term, types, allvars)
    if bad:
        return SafetyReport(False, (), bad)
    for path, sub in subterms(term):
        if isinstance(sub, App):
            head, args = spine(sub)
            for k, part in enumerate([head] + args):
                bad = _superficial(part, types, allvars)
                if bad:
                    return SafetyReport(False, path + (f"part{k}",), bad)
    return SafetyReport(True)


def check_safety(g):
    """Rule-level safety; nonterminals count as closed terms."""
    for name in sorted(g.rules):
        rep = term_safety(g.as_lambda(name), g.alphabet.letters, g.types, {})
        if not rep.verdict:
            rep.path = (name,) + rep.path
            return rep
    return SafetyReport(True)


# ---------------------------------------------------------------- evaluation

class Closure:
    """A term paired with an environment of closures; hashed structurally."""

    __slots__ = ("term", "env", "_h")

    def __init__(self, term, env):
        self.term = term
        self.env = env  # tuple of (name, Closure) sorted by name
        self._h = hash((term, env))

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        return isinstance(other, Closure) and self._h == other._h and \
            self.term == other.term and self.env == other.env

    def lookup(self, name):
        for k, v in self.env:
            if k == name:
                return v
        raise KeyError(name)


def _bind(params, args):
    return tuple(sorted(zip(params, args), key=lambda p: p[0]))


def _env_of(env, term):
    """Restrict env to the free variables of term (keeps keys small)."""
    fv = free_vars(term)
    return tuple((k, v) for k, v in env if k in fv)


class _Evaluator:
    def __init__(self, g, depth, fuel):
        self.g = g
        self.depth = depth
        self.fuel = fuel
        self.letters = g.alphabet.letters
        self.pending = {}  # path -> (head term, env, stack)

    def node(self, clos, used, path):
        """Head-reduce `clos` and build the prefix below it."""
        term, env, stack = clos.term, clos.env, []
        seen = set()
        while True:
            if isinstance(term, App):
                arg = term.arg
                if isinstance(arg, Sym) and arg.kind == "var":
                    stack.append(dict(env)[arg.name])
                else:
                    stack.append(Closure(arg, _env_of(env, arg)))
                term = term.fun
            elif isinstance(term, Sym) and term.kind == "var":
                c = dict(env)[term.name]
                term, env = c.term, c.env
            elif isinstance(term, Lam):
                c = stack.pop()
                env = tuple(sorted(dict(env, **{term.var: c}).items()))
                term = term.body
            elif term.kind == "nt":
                rule = self.g.rules[term.name]
                k = len(rule.params)
                args = list(reversed(stack[len(stack) - k:])) if k else []
                key = (term.name, tuple(args), tuple(stack[:len(stack) - k]))
                if key in seen:
                    return Tree(BOT)
                seen.add(key)
                if used + 1 > self.depth or self.fuel <= 0:
                    self.pending[path] = (term, env, list(stack))
                    return Tree(UNKNOWN)
                used += 1
                self.fuel -= 1
                del stack[len(stack) - k:]
                env = _bind(rule.params, args)
                term = rule.body
            else:
                a = term.name
                r = self.letters[a]
                if len(stack) != r:
                    raise SchemeError(f"letter {a} applied to {len(stack)} arguments")
                kids = [self.node(c, used, path + (i,)) for i, c in enumerate(reversed(stack))]
                return Tree(a, kids)


def _evaluate(g, depth, fuel):
    ev = _Evaluator(g, depth, fuel)
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 20000))
    try:
        t = ev.node(Closure(Sym(g.start, "nt"), ()), 0, ())
    finally:
        sys.setrecursionlimit(old)
    return t, ev.pending


def bohm_prefix(g, depth, step_fuel=10**5):
    """Finite prefix of the Böhm tree: `depth` bounds nonterminal unfoldings per branch."""
    return _evaluate(g, depth, step_fuel)[0]


# ---------------------------------------------------------------- saturation

class _MinSize:
    """Lower bounds on the size of finite nd/bot-free trees a term can produce.

    Ground values are numbers capped at `cap`; higher-order values stay
    symbolic as (term, abstract env). Nonterminal calls are solved by a
    descending chaotic iteration starting from `cap`.
    """

    def __init__(self, g, types, cap, budget=4000):
        self.g = g
        self.types = types
        self.cap = cap
        self.budget = budget
        self.table = {}
        self.letters = g.alphabet.letters
        self.nd = g.alphabet.nd
        self.bot = g.alphabet.bot

    def ground(self, term):
        return self.types.get(id(term), O) == O

    def abstract(self, clos):
        if isinstance(clos, Closure):
            env = tuple((k, self.abstract(v)) for k, v in clos.env)
            if self.ground(clos.term):
                return self.eval(clos.term, env, [])
            return ("fn", clos.term, env)
        return clos

    def eval(self, term, env, stack):
        cap = self.cap
        while True:
            if isinstance(term, App):
                arg = term.arg
                aenv = tuple((k, v) for k, v in env if k in free_vars(arg))
                if isinstance(arg, Sym) and arg.kind == "var":
                    stack.append(dict(env)[arg.name])
                elif self.ground(arg):
                    stack.append(self.eval(arg, aenv, []))
                else:
                    stack.append(("fn", arg, aenv))
                term = term.fun
            elif isinstance(term, Sym) and term.kind == "var":
                v = dict(env)[term.name]
                if isinstance(v, int):
                    return v
                _, term, env = v
            elif isinstance(term, Lam):
                v = stack.pop()
                env = tuple(sorted(dict(env, **{term.var: v}).items()))
                term = term.body
            elif term.kind == "nt":
                rule = self.g.rules[term.name]
                k = len(rule.params)
                args = tuple(reversed(stack[len(stack) - k:])) if k else ()
                rest = stack[:len(stack) - k]
                key = (term.name, args)
                if key not in self.table:
                    if len(self.table) >= self.budget:
                        raise _Budget()
                    self.table[key] = cap
                    self.dirty.add(key)
                val = self.table[key]
                if rest:
                    raise _Budget()  # nonterminal returning a function: give up
                return val
            else:
                a = term.name
                vals = list(reversed(stack))
                if a == self.bot:
                    return cap
                if a == self.nd and len(vals) == 2:
                    return min(vals)
                return min(cap, 1 + sum(vals))

    def solve(self, term, env, stack):
        self.dirty = set()
        try:
            first = self.eval(term, env, list(stack))
            while True:
                changed = False
                for key in list(self.table):
                    name, args = key
                    rule = self.g.rules[name]
                    self.dirty = set()
                    v = self.eval(rule.body, _bind(rule.params, args), [])
                    if v < self.table[key]:
                        self.table[key] = v
                        changed = True
                    if self.dirty:
                        changed = True
                if not changed:
                    break
            return self.eval(term, env, list(stack))
        except _Budget:
            return 1


class _Budget(Exception):
    pass


def _through_unknown(t, leaf_min, path=()):
    """(min size of a complete resolution, min size of one using an unknown leaf)."""
    inf = float("inf")
    if t.label == UNKNOWN:
        m = leaf_min.get(path, 1)
        return inf, m
    if t.label == BOT:
        return inf, inf
    if t.label == ND and len(t.children) == 2:
        a = _through_unknown(t.children[0], leaf_min, path + (0,))
        b = _through_unknown(t.children[1], leaf_min, path + (1,))
        return min(a[0], b[0]), min(a[1], b[1])
    parts = [_through_unknown(c, leaf_min, path + (i,)) for i, c in enumerate(t.children)]
    full = 1 + sum(p[0] for p in parts)
    anyv = [min(p) for p in parts]
    thru = inf
    for i, p in enumerate(parts):
        thru = min(thru, 1 + p[1] + sum(anyv[:i]) + sum(anyv[i + 1:]))
    return full, thru


@dataclass
class Enumeration:
    members: list
    saturated: bool
    prefix: Tree


def language_enumerate(g, size_bound, depth=12, step_fuel=10**5):
    """Members of L(G) up to size_bound found in a Böhm prefix, plus a saturation flag."""
    types = typecheck(g)
    prefix, pending = _evaluate(g, depth, step_fuel)
    members = sorted(nd_resolutions(prefix, size_bound, g.alphabet.nd or ND, g.alphabet.bot or BOT),
                     key=lambda t: (t.size(), str(t)))
    leaf_min = {}
    if pending:
        ms = _MinSize(g, types, size_bound + 1)
        for path, (term, env, stack) in pending.items():
            aenv = tuple((k, ms.abstract(v)) for k, v in env)
            astack = [ms.abstract(c) for c in stack]
            try:
                leaf_min[path] = ms.solve(term, aenv, astack)
            except (KeyError, _Budget):
                leaf_min[path] = 1
    _, thru = _through_unknown(prefix, leaf_min)
    return Enumeration(members, thru > size_bound, prefix)
