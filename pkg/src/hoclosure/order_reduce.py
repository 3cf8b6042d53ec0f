"""Lambda-trees, the deterministic walk that reads their derived trees, order
reduction of safe schemes, and lifting one-way automata to lambda-trees."""

import re
from dataclasses import dataclass

from .cost import BAutomaton, AutomatonError, UP, STAY, EPS
from .schemes import (O, App, Arrow, Rule, Scheme, SchemeError, Sym, arrow,
                      check_safety, is_homogeneous, order, scheme_order,
                      subterms, type_args, typecheck)
from .trees import BOT, UNKNOWN, RankedAlphabet, RegularTree, Tree

APP = "app"


def con(a):
    return f"con_{a}"


def var(x):
    return f"var_{x}"


def lam(x):
    return f"lam_{x}"


def lambda_alphabet(base, variables):
    """con_a/0 per base letter, var_x/0 and lam_x/1 per variable, app/2."""
    letters = {con(a): 0 for a in base}
    for x in variables:
        letters[var(x)] = 0
        letters[lam(x)] = 1
    letters[APP] = 2
    return letters


def classify(label):
    """('con', a) | ('var', x) | ('lam', x) | ('app', None) | ('other', label)."""
    if label == APP:
        return "app", None
    for kind in ("con", "var", "lam"):
        if label.startswith(kind + "_"):
            return kind, label[len(kind) + 1:]
    return "other", label


# walk tokens: ("down",), ("upvar", x), ("uparg", i)
DOWN = ("down",)


class _Nav:
    """Node access by child-index paths over a Tree or a RegularTree."""

    def __init__(self, t):
        self.t = t
        self.cache = {(): t.root if isinstance(t, RegularTree) else t}

    def _get(self, path):
        if path not in self.cache:
            parent = self._get(path[:-1])
            i = path[-1]
            if isinstance(self.t, RegularTree):
                self.cache[path] = self.t.child(parent, i)
            else:
                self.cache[path] = parent.children[i]
        return self.cache[path]

    def label(self, path):
        n = self._get(path)
        return self.t.label(n) if isinstance(self.t, RegularTree) else n.label

    def rank(self, path):
        n = self._get(path)
        return len(self.t.children(n)) if isinstance(self.t, RegularTree) else len(n.children)


def successor(t, state, s, nav=None):
    """The (X,s)-successor of state = (token, node path), or None."""
    nav = nav or _Nav(t)
    tok, v = state
    kind, x = classify(nav.label(v))
    parent = v[:-1] if v else None
    if tok == DOWN:
        if kind in ("lam", "app"):
            return DOWN, v + (0,)
        if kind == "var":
            return ("upvar", x), v
        return None
    if tok[0] == "upvar":
        if parent is None:
            return None
        if kind == "lam" and x == tok[1]:
            return ("uparg", 1), parent
        return tok, parent
    i = tok[1]
    if kind == "app" and i == 1:
        return DOWN, v + (1,)
    if parent is None:
        return None
    if kind == "lam" and i < s:
        return ("uparg", i + 1), parent
    if kind == "app" and i > 1:
        return ("uparg", i - 1), parent
    return None


def _rule_table(s, xs):
    """Which of the seven clauses fire for each (token, label kind); for checks."""
    tokens = [DOWN] + [("upvar", x) for x in xs] + [("uparg", i) for i in range(1, s + 1)]
    labels = ["app", "con_c"] + [var(x) for x in xs] + [lam(x) for x in xs]
    return tokens, labels


def walk_end(t, state, s, fuel, nav=None):
    """Follow the maximal path; returns ("end", state) | ("loop",) | ("fuel",) | ("unknown",)."""
    nav = nav or _Nav(t)
    seen = set()
    steps = 0
    while True:
        if nav.label(state[1]) == UNKNOWN:
            return ("unknown",)
        nxt = successor(t, state, s, nav)
        if nxt is None:
            return ("end", state)
        if nxt in seen:
            return ("loop",)
        seen.add(nxt)
        steps += 1
        if steps > fuel:
            return ("fuel",)
        state = nxt


def derived_tree(t, s, letters, depth=12, walk_fuel=10**5):
    """Derived tree from (down, root), cut at node depth `depth` with `unknown`.

    `letters` gives the ranks of the base alphabet. The children of an
    emitted node w are read from (uparg i) starting one step above w, i.e.
    the state reached from w itself.
    """
    nav = _Nav(t)

    def build(state, d):
        if d <= 0:
            return Tree(UNKNOWN)
        r = walk_end(t, state, s, walk_fuel, nav)
        if r[0] in ("unknown", "fuel"):
            return Tree(UNKNOWN)
        if r[0] == "loop":
            return Tree(BOT)
        tok, w = r[1]
        kind, a = classify(nav.label(w))
        if tok != DOWN or kind != "con":
            return Tree(BOT)
        rank = letters[a]
        if rank == 0:
            return Tree(a)
        if not w:
            return Tree(a, [Tree(BOT)] * rank)
        return Tree(a, [build((("uparg", i), w[:-1]), d - 1) for i in range(1, rank + 1)])

    return build((DOWN, ()), depth)


# ---------------------------------------------------------------- reduction

@dataclass
class Reduction:
    scheme: Scheme
    variables: list
    s: int
    base_letters: dict


def reduce_type(t):
    """Drop order-0 arguments: o^k -> o collapses to o."""
    args = [reduce_type(a) for a in type_args(t) if order(a) > 0]
    return arrow(args)


def ground_arity(t):
    return sum(1 for a in type_args(t) if order(a) == 0)


def reduce_scheme(g):
    """Order reduction of a safe homogeneous scheme of order >= 1."""
    types = typecheck(g)
    if scheme_order(g) < 1:
        raise SchemeError("order reduction needs a scheme of order at least 1")
    rep = check_safety(g)
    if not rep.verdict:
        raise SchemeError(f"scheme is not safe ({rep})")
    for name, ty in g.types.items():
        if not is_homogeneous(ty):
            raise SchemeError(f"type of {name} is not homogeneous: {ty}")
    base = g.alphabet.letters
    # order-0 parameters, renamed apart only where two rules share a name
    used = set(base) | set(g.rules)
    renames = {}
    xs = []
    for name in [g.start] + sorted(n for n in g.rules if n != g.start):
        m = {}
        for p, ty in zip(g.rules[name].params, type_args(g.types[name])):
            if order(ty) == 0:
                new = p
                k = 2
                while new in xs or new in used:
                    new = f"{p}{k}"
                    k += 1
                m[p] = new
                xs.append(new)
        renames[name] = m
    new_letters = lambda_alphabet(base, xs)
    bot2 = "bot"
    while bot2 in new_letters:
        bot2 += "_"
    new_letters[bot2] = 0
    s = 0
    for name, rule in g.rules.items():
        s = max(s, ground_arity(g.types[name]))
        for _, sub in subterms(rule.body):
            s = max(s, ground_arity(types[id(sub)]))
    s = max(s, max(base.values(), default=0))
    rules = {}
    new_types = {}
    for name, rule in g.rules.items():
        ren = renames[name]
        ptypes = dict(zip(rule.params, type_args(g.types[name])))

        def tr(term):
            if isinstance(term, Sym):
                if term.kind == "letter":
                    return Sym(con(term.name), "letter")
                if term.kind == "var" and order(ptypes[term.name]) == 0:
                    return Sym(var(ren[term.name]), "letter")
                return term
            f, a = tr(term.fun), tr(term.arg)
            if types[id(term.arg)] == O:
                return App(App(Sym(APP, "letter"), f), a)
            return App(f, a)

        body = tr(rule.body)
        for p in reversed(rule.params):
            if order(ptypes[p]) == 0:
                body = App(Sym(lam(ren[p]), "letter"), body)
        params = [p for p in rule.params if order(ptypes[p]) > 0]
        rules[name] = Rule(params, body)
        new_types[name] = reduce_type(g.types[name])
    alph = RankedAlphabet(new_letters, bot=bot2)
    base_text = " ".join(f"{a}/{r}" for a, r in base.items())
    comment = f"base: {base_text}  X: {','.join(xs)}  s: {s}"
    g2 = Scheme(alph, new_types, g.start, rules, [comment])
    typecheck(g2)
    return Reduction(g2, xs, s, dict(base))


_HEADER = re.compile(r"(?:base:\s*(?P<base>.*?)\s+)?X:\s*(?P<xs>\S*)\s+s:\s*(?P<s>\d+)")


def read_header(comments):
    """(base letters or None, X, s) from a `base: a/2 ..  X: x,y  s: 2` comment line."""
    for c in comments:
        m = _HEADER.search(c)
        if not m:
            continue
        base = None
        if m.group("base"):
            base = {}
            for tok in m.group("base").split():
                a, _, r = tok.partition("/")
                base[a] = int(r)
        return base, [x for x in m.group("xs").split(",") if x], int(m.group("s"))
    raise SchemeError("no `X: ... s: ...` header comment")


def parse_sidecar(g):
    """Read (X, s) back from a reduced scheme's header comment."""
    _, xs, s = read_header(g.comments)
    return xs, s


def regular_tree_of(g):
    """The regular Böhm tree of an order-0 scheme as an equation system."""
    typecheck(g)
    if scheme_order(g) != 0:
        raise SchemeError("only order-0 schemes generate regular trees directly")
    eqs = {}
    counter = [0]

    def node(term, owner):
        if isinstance(term, Sym) and term.kind == "nt":
            return term.name
        head, args = _spine(term)
        if not isinstance(head, Sym) or head.kind != "letter":
            raise SchemeError("order-0 rule bodies must be letter applications")
        counter[0] += 1
        name = f"{owner}_{counter[0]}"
        eqs[name] = (head.name, [node(a, owner) for a in args])
        return name

    for name, rule in g.rules.items():
        head, args = _spine(rule.body)
        eqs[name] = (head.name, [node(a, name) for a in args])
    return RegularTree(eqs, g.start)


def _spine(t):
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    return t, args[::-1]


# ---------------------------------------------------------------- automaton lift

def lift_automaton(a, variables, s, base_bot=BOT):
    """Two-way automaton over the lambda alphabet simulating one-way `a` on derived trees.

    States: ("at", q) sits on an emitted con_a node; ("walk", q, act, token)
    performs the deterministic walk (priority 0) and applies `act` once it
    reaches a con_a node; ("atbot", q) plays a's moves on a bottom leaf;
    ("lose",) is a rejecting sink.
    """
    if not a.one_way():
        raise AutomatonError("lifting needs a one-way automaton")
    letters = lambda_alphabet(a.letters, variables)
    extra_bot = "bot"
    letters.setdefault(extra_bot, 0)
    zero = tuple(EPS for _ in range(a.counters))
    tokens = [DOWN] + [("upvar", x) for x in variables] + [("uparg", i) for i in range(1, s + 1)]
    acts = {zero}
    for disj in a.delta.values():
        for d in disj:
            for _, act, _ in d:
                acts.add(tuple(act))
    states, prio, delta = [], {}, {}

    def add(q, p):
        if q not in prio:
            prio[q] = p
            states.append(q)

    walk = lambda q, act, tok: ("walk", q, act, tok)
    lose = ("lose",)
    add(lose, 1)
    max_p = max(a.priority.values(), default=0)
    for q in a.states:
        add(("at", q), a.priority[q])
        add(("atbot", q), a.priority[q])
        for act in sorted(acts):
            for tok in tokens:
                add(walk(q, act, tok), 0)
    start = walk(a.init, zero, DOWN)
    # the winning loop for a true conjunction needs no state: empty disjunct
    for label in letters:
        kind, x = classify(label)
        delta[(lose, label)] = [((STAY, zero, lose),)]
        for q in a.states:
            # bottom simulation is label independent
            bot_moves = a.moves(q, base_bot) if base_bot in a.letters else []
            delta[(("atbot", q), label)] = [tuple((STAY, tuple(act), ("atbot", q2)) for _, act, q2 in d)
                                           for d in bot_moves]
            if kind == "con":
                moves = []
                for d in a.moves(q, x):
                    triples = []
                    for direction, act, q2 in d:
                        if direction == STAY:
                            triples.append((STAY, tuple(act), ("at", q2)))
                        else:
                            triples.append((UP, zero, walk(q2, tuple(act), ("uparg", direction))))
                    moves.append(tuple(triples))
                if moves and all(any(t[0] == UP for t in m) for m in moves):
                    moves.append(((STAY, zero, lose),))
                delta[(("at", q), label)] = moves
            else:
                delta[(("at", q), label)] = [((STAY, zero, lose),)]
            for act in sorted(acts):
                for tok in tokens:
                    src = walk(q, act, tok)
                    step = _walk_move(tok, kind, x, s, q, act, zero, walk)
                    # going up at the root means the walk dies; Eve is stuck with the sink
                    delta[(src, label)] = [step] if step[0][0] != UP else [step, ((STAY, zero, lose),)]
    lifted = BAutomaton(letters, states, start, prio, a.counters, delta)
    return lifted


def _walk_move(tok, kind, x, s, q, act, zero, walk):
    """One step of the walk as a single-triple disjunct, mirroring `successor`."""
    if tok == DOWN:
        if kind in ("lam", "app"):
            return ((1, zero, walk(q, act, DOWN)),)
        if kind == "var":
            return ((STAY, zero, walk(q, act, ("upvar", x))),)
        if kind == "con":
            return ((STAY, act, ("at", q)),)
        return ((STAY, act, ("atbot", q)),)
    if tok[0] == "upvar":
        if kind == "lam" and x == tok[1]:
            return ((UP, zero, walk(q, act, ("uparg", 1))),)
        return ((UP, zero, walk(q, act, tok)),)
    i = tok[1]
    if kind == "lam" and i < s:
        return ((UP, zero, walk(q, act, ("uparg", i + 1))),)
    if kind == "app" and i > 1:
        return ((UP, zero, walk(q, act, ("uparg", i - 1))),)
    if kind == "app" and i == 1:
        return ((2, zero, walk(q, act, DOWN)),)
    if kind == "con":
        # the state (uparg i, w) at an emitted node starts one step above w
        return ((UP, zero, walk(q, act, tok)),)
    return ((STAY, act, ("atbot", q)),)
