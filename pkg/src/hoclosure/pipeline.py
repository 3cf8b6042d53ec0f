"""Top-level reductions: diagonal checks, SUP, emptiness through SUP, and downward closures.

Verdicts are three-valued.  A `yes`/`no` produced from an enumeration is
marked `exact=False`: it only speaks about members up to the size bound.
"""

import itertools
from dataclasses import dataclass, field

from . import fta, stre
from .cost import EPS, INC, RESET, STAY, BAutomaton
from .fta import EpsBuilder, Nfta
from .ftt import Call, Ftt, Rule, builder_downward, builder_intersect, builder_mark, builder_pad
from .schemes import language_enumerate
from .trees import BOT, ND, Tree, branch_count_ok, merge_letters


class PipelineError(ValueError):
    """Raised on violated preconditions; `witness` holds an offending tree when there is one."""

    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


@dataclass
class TriState:
    kind: str  # "yes", "no" or "unknown"
    reason: str = ""
    bounds: dict = field(default_factory=dict)
    exact: bool = True

    def __str__(self):
        tag = self.kind
        if self.kind != "unknown" and not self.exact:
            tag += " (bounded)"
        return f"{tag}: {self.reason}" if self.reason else tag


# ---------------------------------------------------------------- language handles

class LanguageHandle:
    """A tree language given as an automaton, a scheme with bounds, or a finite set."""

    def __init__(self, kind, obj, letters, exact, size=12, depth=12, fuel=10**5):
        self.kind = kind
        self.obj = obj
        self.letters = dict(letters)
        self.exact = exact
        self.size = size
        self.depth = depth
        self.fuel = fuel
        self._members = {}

    @classmethod
    def from_nfta(cls, a, exact=True, size=12):
        return cls("nfta", a, a.letters, exact, size=size)

    @classmethod
    def from_scheme(cls, g, size=12, depth=12, fuel=10**5):
        skip = {g.alphabet.nd, g.alphabet.bot}
        lets = {a: r for a, r in g.alphabet.letters.items() if a not in skip}
        return cls("scheme", g, lets, False, size, depth, fuel)

    @classmethod
    def from_trees(cls, trees, letters=None):
        trees = sorted(set(trees), key=lambda t: (t.size(), str(t)))
        lets = merge_letters(letters or {}, *[t.letters() for t in trees])
        return cls("finite", trees, lets, True, size=max([t.size() for t in trees], default=1))

    def bounds(self):
        if self.kind == "scheme":
            return {"size": self.size, "depth": self.depth, "fuel": self.fuel}
        return {"size": self.size}

    def members(self, size=None):
        """(members up to `size`, saturated?)."""
        size = self.size if size is None else size
        if size not in self._members:
            if self.kind == "nfta":
                self._members[size] = (self.obj.enumerate(size), True)
            elif self.kind == "finite":
                self._members[size] = ([t for t in self.obj if t.size() <= size], True)
            else:
                e = language_enumerate(self.obj, size, self.depth, self.fuel)
                self._members[size] = (e.members, e.saturated)
        return self._members[size]

    def automaton(self):
        """Exact automaton for nfta/finite handles, the enumerated approximation for schemes."""
        if self.kind == "nfta":
            return self.obj
        trees = self.obj if self.kind == "finite" else self.members()[0]
        return fta.from_trees(trees, self.letters)


# ---------------------------------------------------------------- diagonal problem

def diagonal_bruteforce(L, sigma, n_max):
    """(largest n <= n_max with an n-large enumerated member, verdict); -1 if L looks empty."""
    members, saturated = L.members()
    sigma = set(sigma)
    bounds = dict(L.bounds(), n_max=n_max, saturated=saturated)
    best = -1
    for n in range(n_max + 1):
        if any(branch_count_ok(t, sigma, n) for t in members):
            best = n
        else:
            break
    if not sigma:
        kind = "yes" if members else "no"
        return best, TriState(kind, "empty letter set: only nonemptiness matters", bounds,
                              exact=bool(members))
    if best == n_max:
        return best, TriState("yes", f"n-large members found for every n <= {n_max}", bounds, exact=False)
    return best, TriState("no", f"no enumerated member is {best + 1}-large", bounds, exact=False)


def count_aux(sigma, n):
    """bottom_up step computing per-letter minimal branch counts, capped at n."""
    sig = sorted(sigma)

    def step(letter, q, kids):
        if kids:
            yield tuple(min(n, (letter == a) + min(k[i] for k in kids)) for i, a in enumerate(sig))
        else:
            yield tuple(min(n, int(letter == a)) for a in sig)

    return step


def large_nonempty(b, sigma, n):
    """Some tree of L(b) has >= n occurrences of every sigma letter on every branch."""
    if not sigma or n <= 0:
        return not b.is_empty()
    items = fta.bottom_up(b, count_aux(sigma, n))
    return any(all(c == n for c in x) for q in b.final for x in items.get(q, ()))


def diagonal_regular(b, sigma, check_size=8):
    """Threshold search on an automaton, cross-checked against enumerated members."""
    b = b.trim()
    sigma = sorted(set(sigma))
    if b.is_empty():
        return TriState("no", "empty language")
    if not sigma:
        return TriState("yes", "empty letter set and nonempty language")
    n_star = len(b.states) * len(sigma) + 1
    bounds = {"threshold": n_star, "check_size": check_size}
    last = 0
    for n in range(1, n_star + 1):
        if not large_nonempty(b, sigma, n):
            break
        last = n
    # members up to check_size give lower bounds the search must respect
    brute, _ = diagonal_bruteforce(LanguageHandle.from_nfta(b, size=check_size), sigma, n_star)
    bounds["witnessed_by_members"] = brute
    if brute > last:
        return TriState("unknown", f"members are {brute}-large but the search stopped at {last}", bounds)
    if last < n_star:
        return TriState("no", f"no {last + 1}-large tree", bounds)
    return TriState("yes", f"{n_star}-large trees exist (threshold heuristic)", bounds, exact=False)


def _subsets(xs):
    xs = sorted(xs)
    return [frozenset(c) for k in range(len(xs) + 1) for c in itertools.combinations(xs, k)]


def _alive_name(s):
    return "alive" + "".join(f"_{a}" for a in sorted(s))


def diagonal_automaton(sigma, alphabet):
    """One-way B-automaton that (n-1)-accepts T iff no tree of NT(T) is n-large for sigma.

    Adam resolves nd; Eve descends keeping a set of letters whose counters
    she still tracks, dropping (resetting) any of them on the way, and wins
    at a leaf where one tracked letter stayed below the bound, at bot, or
    on an infinite branch.  One counter per sigma letter, all priorities 0.
    """
    sigma = sorted(set(sigma))
    if not sigma:
        raise PipelineError("the diagonal automaton needs a nonempty letter set")
    nd = alphabet.nd or ND
    bot = alphabet.bot or BOT
    letters = dict(alphabet.letters)
    if letters.get(nd) != 2 or letters.get(bot) != 0:
        raise PipelineError("the alphabet needs nd/2 and bot/0")

    def act(letter, keep):
        return tuple((INC if letter == a else EPS) if a in keep else RESET for a in sigma)

    states = {s: _alive_name(s) for s in _subsets(sigma)}
    win = "win"
    delta = {}
    for s, q in states.items():
        for a, r in letters.items():
            if a == nd:
                delta[(q, a)] = [((1, (EPS,) * len(sigma), q), (2, (EPS,) * len(sigma), q))]
            elif a == bot:
                delta[(q, a)] = [()]
            elif r == 0:
                delta[(q, a)] = [((STAY, act(a, {x}), win),) for x in sorted(s)]
            else:
                delta[(q, a)] = [((i, act(a, s2), states[s2]),)
                                 for i in range(1, r + 1) for s2 in _subsets(s)]
    for a in letters:
        delta[(win, a)] = [()]
    names = [states[s] for s in _subsets(sigma)][::-1] + [win]
    return BAutomaton(letters, names, states[frozenset(sigma)], {q: 0 for q in names},
                      len(sigma), delta)


def nt_nfta(t, nd=ND, bot=BOT):
    """Exact automaton for NT(T) of a regular tree: nd is a union, bot produces nothing."""
    eb = EpsBuilder()
    lets = {}
    for name in t.names():
        a, kids = t.label(name), t.children(name)
        if a == nd and len(kids) == 2:
            eb.link(kids[0], name)
            eb.link(kids[1], name)
        elif a != bot:
            eb.add(a, kids, name)
            lets[a] = len(kids)
    return eb.build([t.root], letters=lets)


# ---------------------------------------------------------------- SUP

def p_large_aux(pairs, n):
    """bottom_up step for n-largeness w.r.t. (iteration root, body root) pairs.

    The aux value per pair is how many more ancestors labeled with the
    iteration root the subtree still needs, capped at n.
    """

    def step(letter, q, kids):
        need = []
        for k, (b, c) in enumerate(pairs):
            below = max((x[k] for x in kids), default=0)
            need.append(max(n if letter == c else 0, below - (letter == b), 0))
        yield tuple(need)

    return step


def p_large_nonempty(b, pairs, n):
    if not pairs or n <= 0:
        return not b.is_empty()
    items = fta.bottom_up(b, p_large_aux(pairs, n))
    return any(not any(x) for q in b.final for x in items.get(q, ()))


def _check_inside(p, L):
    """The precondition L ⊆ ⟦p⟧, exact when possible."""
    if L.exact:
        bad = fta.counterexample(stre.to_nfta(p), L.automaton())
    else:
        bad = next((t for t in L.members()[0] if not stre.member(t, p)), None)
    if bad is not None:
        raise PipelineError(f"language is not inside {stre.show(p)}: {bad}", bad)


def sup_check(p, L, n_max=6):
    """Whether ⟦p⟧ ⊆ ↓L for a diversified pure product p and a language inside ⟦p⟧.

    Decided by looking for trees of ↓L ∩ CT(p) that are n-large with respect
    to p.  Exact handles run n up to a state-count threshold; others stop at
    n_max.  When every iteration root has rank 1 the padded language is also
    sent to the plain diagonal search and both answers must agree.
    """
    if isinstance(p, stre.Sum):
        p = stre._one(p)
    if not stre.is_pure(p) or not stre.is_diversified(p):
        raise PipelineError(f"{stre.show(p)} is not a diversified pure product")
    _check_inside(p, L)
    lets = merge_letters(L.letters, stre.letters(p))
    down = builder_downward(lets).apply_to_nfta(L.automaton().with_letters(lets))
    ct = stre.versatile_nfta(p)
    l1 = builder_intersect(ct, lets).apply_to_nfta(down).trim()
    pairs = stre.large_pairs(p)
    bounds = dict(L.bounds(), states=len(l1.states))
    if l1.is_empty():
        return TriState("no", "no versatile tree lies below the language", bounds, exact=L.exact)
    if not pairs:
        return TriState("yes", "no iteration: the versatile tree itself lies below", bounds, exact=L.exact)
    limit = len(l1.states) * len(pairs) + 1 if L.exact else n_max
    bounds["n_limit"] = limit
    last = 0
    for n in range(1, limit + 1):
        if not p_large_nonempty(l1, pairs, n):
            break
        last = n
    route = "p-largeness"
    sigma = {b for b, _ in pairs}
    if all(lets.get(b, stre.letters(p).get(b)) == 1 for b in sigma):
        padded = builder_pad(p, lets).apply_to_nfta(l1)
        route = "p-largeness, padded diagonal"
        reach = 0
        for n in range(1, limit + 1):
            if not large_nonempty(padded, sigma, n):
                break
            reach = n
        bounds["padded_reach"] = reach
        if min(reach, limit) != min(last, limit):
            bounds["route"] = route
            return TriState("unknown", f"routes disagree: {last} vs {reach}", bounds)
    bounds["route"] = route
    bounds["reached"] = last
    if last < limit:
        return TriState("no", f"nothing {last + 1}-large below the language", bounds,
                        exact=L.exact)
    return TriState("yes", f"{limit}-large versatile trees below the language", bounds, exact=False)


def chain_transducer(letters):
    """Ignores its input and writes a^k(e) for every k."""
    rules = [Rule("p", None, Tree("a", [Tree(Call("p", 0))]))]
    rules += [Rule("p", a, Tree("e")) for a in sorted(letters)]
    return Ftt(letters, {"a": 1, "e": 0}, ["p"], "p", rules)


CHAIN_PRODUCT = stre.star([stre.ctx("a", stre.HOLE_ARG)], stre.single(stre.opt("e")))


def emptiness_via_sup(L, n_max=6):
    """`yes` when L is empty; decided as SUP for {a(#)}*.e?() on the chain image."""
    image = chain_transducer(L.letters).apply_to_nfta(L.automaton().with_letters(L.letters))
    r = sup_check(CHAIN_PRODUCT, LanguageHandle.from_nfta(image, exact=L.exact), n_max)
    bounds = dict(L.bounds(), **{k: v for k, v in r.bounds.items() if k not in L.bounds()})
    if r.kind == "yes":
        return TriState("no", "nonempty", bounds, exact=True)
    if r.kind == "no":
        return TriState("yes", "empty", bounds, exact=L.exact)
    return TriState("unknown", r.reason, bounds)


def downward_closure_regular(b):
    return builder_downward(b.letters).apply_to_nfta(b)


# ---------------------------------------------------------------- closure search

def _arg_tuples(r, total, pool, holes):
    """Tuples of r arguments with sizes adding to total; holes have size 1."""
    if r == 0:
        if total == 0:
            yield ()
        return
    for k in range(1, total - (r - 1) + 1):
        options = list(pool.get(k, ()))
        if holes and k == 1:
            options = [stre.HOLE_ARG] + options
        for a in options:
            for rest in _arg_tuples(r - 1, total - k, pool, holes):
                yield (a,) + rest


class ClosureSearch:
    """Size-ordered search for the maximal pure products below ↓L."""

    def __init__(self, L, n_max=6, max_contexts=2, log=None):
        self.L = L
        self.n_max = n_max
        self.max_contexts = max_contexts
        self.letters = dict(sorted(L.letters.items()))
        self.log = log if log is not None else []
        self.down = downward_closure_regular(L.automaton().with_letters(self.letters))
        self.pool = {}  # size -> passing products, one per equivalence class
        self.seen = {}  # fingerprint -> [(product, passed)]
        self.checked = 0

    def fingerprint(self, p):
        return tuple(str(t) for t in stre.to_nfta(p).enumerate(5))

    def passes(self, p):
        """Check ⟦p⟧ ⊆ ↓L through diversification, marking and SUP."""
        q, marks = stre.diversify(p)
        marked = builder_mark(marks, self.letters).apply_to_nfta(self.down)
        inst = fta.product(marked, stre.to_nfta(q)).trim()
        r = sup_check(q, LanguageHandle.from_nfta(inst, exact=self.L.exact, size=self.L.size),
                      self.n_max)
        self.checked += 1
        ok = r.kind == "yes"
        if self.L.exact and r.kind != "unknown":
            direct = fta.includes(self.down, stre.to_nfta(p))
            if direct != ok:
                self.log.append(f"  sup and direct inclusion disagree on {stre.show(p)}; using inclusion")
                ok = direct
        return ok

    def contexts(self, total):
        for a, r in self.letters.items():
            if r == 0:
                continue
            for args in _arg_tuples(r, total - 1, self.pool, True):
                if stre.HOLE_ARG in args:
                    yield stre.Ctx(a, tuple(x if x is stre.HOLE_ARG else stre.single(x) for x in args))

    def candidates(self, size):
        for a, r in self.letters.items():
            for args in _arg_tuples(r, size - 1, self.pool, False):
                yield stre.Opt(a, tuple(stre.single(x) for x in args))
        ctx_by_size = {k: list(self.contexts(k)) for k in range(2, size - 1)}
        for body_size in range(1, size - 2):
            budget = size - 1 - body_size
            for cs in self._context_sets(budget, ctx_by_size):
                for body in self.pool.get(body_size, ()):
                    yield stre.Star(cs, stre.single(body))

    def _context_sets(self, budget, ctx_by_size):
        flat = [(k, c) for k in sorted(ctx_by_size) for c in ctx_by_size[k]]
        for m in range(1, self.max_contexts + 1):
            for combo in itertools.combinations(range(len(flat)), m):
                if sum(flat[i][0] for i in combo) == budget:
                    yield tuple(flat[i][1] for i in combo)

    def known(self, p, fp):
        for q, ok in self.seen.get(fp, ()):
            if stre.equivalent(stre.single(p), stre.single(q)):
                return ok
        return None

    def run(self, bound):
        passing = []
        for size in range(1, bound + 1):
            fresh = []
            for p in self.candidates(size):
                if not stre.nonempty(p):
                    continue
                fp = self.fingerprint(p)
                if self.known(p, fp) is not None:
                    continue
                ok = self.passes(p)
                self.seen.setdefault(fp, []).append((p, ok))
                if ok:
                    fresh.append(p)
            self.pool[size] = fresh
            passing += fresh
            self.log.append(f"size {size}: {len(fresh)} new passing products")
        return passing


def maximal_products(products):
    """Products not included in another one; larger products are kept first."""
    keep = []
    for p in sorted(products, key=lambda x: (-stre.size(x), stre.show(x))):
        if any(stre.stre_includes(stre.single(p), stre.single(m)) for m in keep):
            continue
        keep = [m for m in keep if not stre.stre_includes(stre.single(m), stre.single(p))]
        keep.append(p)
    return sorted(keep, key=lambda x: (stre.size(x), stre.show(x)))


def downward_closure_search(L, stre_size_bound, n_max=6, max_contexts=2):
    """(candidate sum or None, report lines, verdict) for ↓L."""
    report = [f"closure search: product size <= {stre_size_bound}, n_max {n_max}, "
              f"handle {L.kind} ({'exact' if L.exact else 'bounded'})"]
    search = ClosureSearch(L, n_max, max_contexts, report)
    passing = search.run(stre_size_bound)
    best = maximal_products(passing)
    report.append(f"checked {search.checked} products, {len(passing)} passed, {len(best)} maximal")
    cand = stre.Sum(tuple(best))
    for p in best:
        report.append(f"  maximal: {stre.show(p)}")
    bounds = dict(L.bounds(), stre_size=stre_size_bound, n_max=n_max)
    if L.exact:
        union = stre.to_nfta(cand) if best else fta.empty(search.letters)
        missing = fta.counterexample(union.with_letters(search.letters), search.down)
        up = all(fta.includes(search.down, stre.to_nfta(p)) for p in best)
        report.append(f"  (a) closure inside candidate: {'yes' if missing is None else f'no, {missing}'}")
        report.append(f"  (b) candidate inside closure: {'yes' if up else 'no'}")
        if missing is None and up:
            return cand, report, TriState("yes", "candidate verified exactly", bounds)
        return None, report, TriState("unknown", "no verified candidate within the bound", bounds)
    members, saturated = L.members()
    missing = next((t for t in members if not stre.member(t, cand)), None)
    report.append(f"  (a) {len(members)} enumerated members inside candidate: "
                  f"{'yes' if missing is None else f'no, {missing}'}")
    report.append("  (b) every product passed SUP up to n_max")
    if missing is None and best:
        return cand, report, TriState("yes", "candidate consistent with all enumerated members",
                                      dict(bounds, saturated=saturated), exact=False)
    return None, report, TriState("unknown", "frontier: " + " + ".join(stre.show(p) for p in best),
                                  bounds)
