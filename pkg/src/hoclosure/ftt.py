"""Linear top-down finite tree transducers and the builders used by the closure pipeline.

A rule is `(state, letter, template)` where `letter` is None for rules that
fire on any subtree (`(p, x) -> V`).  Templates are trees whose leaves may be
`Call(state, i)`: continue in `state` on the i-th input child (1-based), or
on the current subtree itself when i == 0.
"""

import itertools
import re
from dataclasses import dataclass

from .fta import EpsBuilder, Nfta
from .trees import Tree, merge_letters


class FttError(ValueError):
    pass


@dataclass(frozen=True)
class Call:
    state: object
    var: int  # 1-based child index, 0 for the whole subtree

    def __str__(self):
        x = "x" if self.var == 0 else f"x{self.var}"
        return f"({self.state},{x})"


@dataclass(frozen=True)
class Rule:
    state: object
    letter: object  # None: rule on any subtree
    template: Tree

    def calls(self):
        return [n.label for n in self.template.nodes() if isinstance(n.label, Call)]


class Ftt:
    def __init__(self, in_letters, out_letters, states, init, rules):
        self.in_letters = dict(in_letters)
        self.out_letters = dict(out_letters)
        self.states = list(dict.fromkeys(states))
        self.init = init
        self.rules = list(rules)
        for r in self.rules:
            if r.state not in self.states:
                raise FttError(f"rule for undeclared state {r.state}")
            if r.letter is not None and r.letter not in self.in_letters:
                raise FttError(f"rule on unknown input letter {r.letter}")
            rank = 0 if r.letter is None else self.in_letters[r.letter]
            for node in r.template.nodes():
                lab = node.label
                if isinstance(lab, Call):
                    if node.children:
                        raise FttError("state/variable pairs are leaves")
                    if lab.state not in self.states:
                        raise FttError(f"template calls undeclared state {lab.state}")
                    if r.letter is None and lab.var != 0:
                        raise FttError("rules on x may only use the variable x")
                    if r.letter is not None and not 1 <= lab.var <= rank:
                        raise FttError(f"variable x{lab.var} out of range for {r.letter}")
                elif self.out_letters.get(lab) != len(node.children):
                    raise FttError(f"output letter {lab} used with {len(node.children)} children")
        self._by_state = {}
        for r in self.rules:
            self._by_state.setdefault(r.state, []).append(r)

    def is_linear(self):
        for r in self.rules:
            vars_ = [c.var for c in r.calls()]
            if len(vars_) != len(set(vars_)):
                return False
        return True

    def check_linear(self):
        if not self.is_linear():
            bad = next(r for r in self.rules if len(r.calls()) != len({c.var for c in r.calls()}))
            raise FttError(f"transducer is not linear: rule {self._show(bad)}")

    def _show(self, r):
        if r.letter is None:
            lhs = "x"
        else:
            k = self.in_letters[r.letter]
            lhs = r.letter if k == 0 else f"{r.letter}({','.join(f'x{i}' for i in range(1, k + 1))})"
        return f"{r.state}, {lhs} -> {_show_template(r.template)}"

    def to_text(self):
        lines = ["in " + " ".join(f"{a}/{r}" for a, r in sorted(self.in_letters.items())),
                 "out " + " ".join(f"{a}/{r}" for a, r in sorted(self.out_letters.items())),
                 "states " + " ".join(str(s) for s in self.states),
                 f"init {self.init}"]
        lines += [self._show(r) for r in self.rules]
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text):
        """Lines `in a/2 ...`, `out ...`, `states p q`, `init p`, `p, a(x1,x2) -> a((p,x1),(p,x2))`."""
        ins, outs, states, init, raw = {}, {}, [], None, []
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("--", 1)[0].strip()
            if not line:
                continue
            head, _, rest = line.partition(" ")
            if head == "in":
                ins.update(_letters(rest))
            elif head == "out":
                outs.update(_letters(rest))
            elif head == "states":
                states += rest.split()
            elif head == "init":
                init = rest.strip()
            else:
                raw.append((n, line))
        if init is None:
            raise FttError("missing `init` line")
        rules = []
        for n, line in raw:
            m = re.fullmatch(r"(\S+)\s*,\s*(.+?)\s*->\s*(.+)", line)
            if not m:
                raise FttError(f"line {n}: cannot read rule {line!r}")
            p, lhs, rhs = m.groups()
            if lhs == "x":
                letter = None
            else:
                letter = re.match(r"[A-Za-z0-9_']+", lhs).group(0)
            rules.append(Rule(p, letter, _parse_template(rhs)))
        return cls(ins, outs, states, init, rules)

    # ------------------------------------------------------------- semantics
    def apply_to_tree(self, t, bound):
        """All outputs of size <= bound for input t."""
        positions = [p for p, _ in t.positions()]
        sub = dict(t.positions())
        out = {(q, p): set() for q in self.states for p in positions}
        changed = True
        while changed:
            changed = False
            for p in sorted(positions, key=len, reverse=True):
                node = sub[p]
                for r in self.rules:
                    if r.letter is not None and r.letter != node.label:
                        continue
                    for u in _fill(r.template, lambda c: out[(c.state, p if c.var == 0 else p + (c.var - 1,))],
                                   bound):
                        if u not in out[(r.state, p)]:
                            out[(r.state, p)].add(u)
                            changed = True
        return out[(self.init, ())]

    def apply_to_nfta(self, b):
        """Automaton for the image of L(b); the transducer must be linear."""
        self.check_linear()
        b = b.trim()
        eb = EpsBuilder()
        trans = sorted(b.transitions, key=repr)
        bstates = sorted(b.states, key=repr)
        for k, r in enumerate(self.rules):
            if r.letter is None:
                for q in bstates:
                    _emit(eb, r.template, lambda c, q=q: ("pair", c.state, q), ("pair", r.state, q), (k, q))
            else:
                for a, ch, q in trans:
                    if a != r.letter:
                        continue
                    _emit(eb, r.template, lambda c, ch=ch: ("pair", c.state, ch[c.var - 1]),
                          ("pair", r.state, q), (k, a, ch, q))
        final = [("pair", self.init, q) for q in b.final]
        return eb.build(final, letters=self.out_letters).renumber()


def _letters(text):
    out = {}
    for tok in text.split():
        a, _, r = tok.partition("/")
        out[a] = int(r)
    return out


def _show_template(t):
    if isinstance(t.label, Call):
        return str(t.label)
    if not t.children:
        return str(t.label)
    return f"{t.label}({','.join(_show_template(c) for c in t.children)})"


_TT = re.compile(r"\s*(\(\s*[A-Za-z0-9_']+\s*,\s*x\d*\s*\)|[A-Za-z0-9_']+|[(),])")


def _parse_template(text):
    toks, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TT.match(text, pos)
        if not m:
            raise FttError(f"cannot read template {text!r}")
        toks.append(m.group(1))
        pos = m.end()
    i = 0

    def node():
        nonlocal i
        tok = toks[i]
        i += 1
        if tok.startswith("("):
            st, _, v = tok[1:-1].partition(",")
            v = v.strip()
            return Tree(Call(st.strip(), 0 if v == "x" else int(v[1:])))
        kids = []
        if i < len(toks) and toks[i] == "(":
            i += 1
            if toks[i] != ")":
                kids.append(node())
                while toks[i] == ",":
                    i += 1
                    kids.append(node())
            i += 1
        return Tree(tok, kids)

    t = node()
    if i != len(toks):
        raise FttError(f"trailing input in template {text!r}")
    return t


def _fill(template, pool, bound):
    """Instances of a template with calls replaced from pool(call), size <= bound."""

    def go(t):
        if isinstance(t.label, Call):
            return [u for u in pool(t.label) if u.size() <= bound]
        out = []
        for kids in itertools.product(*[go(c) for c in t.children]):
            if 1 + sum(k.size() for k in kids) <= bound:
                out.append(Tree(t.label, kids))
        return out

    return go(template)


def _emit(eb, template, state_of, target, tag):
    """Transitions generating the template with calls read from automaton states."""

    def go(t, path):
        if isinstance(t.label, Call):
            return state_of(t.label)
        kids = [go(c, path + (i,)) for i, c in enumerate(t.children)]
        q = ("tpl", tag, path)
        eb.add(t.label, kids, q)
        return q

    top = go(template, ())
    eb.link(top, target)


# ---------------------------------------------------------------- builders

def _vars(r):
    return [Tree(Call("p", i)) for i in range(1, r + 1)]


def identity(letters):
    rules = [Rule("p", a, Tree(a, _vars(r))) for a, r in sorted(letters.items())]
    return Ftt(letters, letters, ["p"], "p", rules)


def builder_downward(letters):
    """Single-state transducer whose image of L is the downward closure of L."""
    letters = dict(letters)
    rules = []
    for a, r in sorted(letters.items()):
        rules.append(Rule("p", a, Tree(a, _vars(r))))
        for i in range(1, r + 1):
            rules.append(Rule("p", a, Tree(Call("p", i))))
    return Ftt(letters, letters, ["p"], "p", rules)


def builder_intersect(r_auto, letters=None):
    """Copies its input while running r_auto top-down; image of L is L intersected with L(r_auto)."""
    letters = merge_letters(r_auto.letters, letters or {})
    names = {q: f"r{i}" for i, q in enumerate(sorted(r_auto.states, key=repr))}
    init = "ini"
    rules = []
    for a, ch, q in sorted(r_auto.transitions, key=repr):
        tpl = Tree(a, [Tree(Call(names[c], i + 1)) for i, c in enumerate(ch)])
        rules.append(Rule(names[q], a, tpl))
        if q in r_auto.final:
            rules.append(Rule(init, a, tpl))
    return Ftt(letters, letters, [init] + list(names.values()), init, rules)


def builder_mark(marks, letters):
    """Relabels each letter a by any of its marked copies; letters without marks are kept."""
    by_orig = {}
    for m, a in sorted(marks.items()):
        by_orig.setdefault(a, []).append(m)
    letters = dict(letters)
    out = {}
    rules = []
    for a, r in sorted(letters.items()):
        for m in by_orig.get(a, [a]):
            out[m] = r
            rules.append(Rule("p", a, Tree(m, _vars(r))))
    return Ftt(letters, out, ["p"], "p", rules)


def builder_pad(p, letters):
    """Padding for a diversified pure product p over `letters`.

    For each iteration I*.P' with b = root(I*.P') and c = root(P'): a leaf
    ending a branch that carries no c may grow into a spine of b nodes.  When
    b has rank r > 1 the spine continues in the first child and the other
    r - 1 children repeat the original leaf.
    """
    from .stre import large_pairs

    pairs = large_pairs(p)
    letters = dict(letters)
    cs = sorted({c for _, c in pairs})
    # copy states remember which c-letters the branch has passed
    subsets = [frozenset(x) for k in range(len(cs) + 1) for x in itertools.combinations(cs, k)]
    name = {x: "s" + "".join(f"_{c}" for c in sorted(x)) for x in subsets}
    states = list(name.values())
    rules = []
    for x in subsets:
        for a, r in sorted(letters.items()):
            x2 = x | {a} if a in cs else x
            rules.append(Rule(name[x], a, Tree(a, [Tree(Call(name[x2], i)) for i in range(1, r + 1)])))
            if r:
                continue
            missing = sorted({b for b, c in pairs if c not in x2})
            if not missing:
                continue
            # growth states only finish on the leaf they were entered for
            g = f"g{name[x2][1:]}__{a}"
            if g not in states:
                states.append(g)
                rules.append(Rule(g, a, Tree(a)))
                for b in missing:
                    rules.append(Rule(g, None, Tree(b, [Tree(Call(g, 0))] + [Tree(a)] * (letters[b] - 1))))
            rules.append(Rule(name[x], None, Tree(Call(g, 0))))
    return Ftt(letters, letters, states, name[frozenset()], list(dict.fromkeys(rules)))
