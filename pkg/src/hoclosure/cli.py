"""Command-line front end.  Every report ends with `VERDICT yes|no|unknown`.

Exit status: 0 on a definite verdict, 10 on `unknown`, 2 on input errors.
"""

import argparse
import os
import sys

from . import cost, fta, order_reduce, pipeline, stre
from .schemes import Scheme, bohm_prefix, check_safety, language_enumerate, scheme_order, typecheck
from .trees import UNKNOWN, RankedAlphabet, RegularTree, parse_tree

EXIT_UNKNOWN = 10
EXIT_ERROR = 2


class Report:
    def __init__(self, command, args):
        inputs = [str(getattr(args, k)) for k in COMMANDS[command][1]]
        self.lines = [" ".join(["hoclosure", command] + inputs)]
        self.verdict = "unknown"
        self.artifact = None  # what --out writes, when a command has a natural output file

    def add(self, *lines):
        for line in lines:
            self.lines.extend(str(line).rstrip("\n").split("\n"))

    def text(self):
        return "\n".join(self.lines + [f"VERDICT {self.verdict}"]) + "\n"


def _read(path):
    with open(path, encoding="utf-8") as f:
        return f.read()


def _comments(text):
    return [line.strip()[2:].strip() for line in text.splitlines() if line.strip().startswith("--")]


def _text_or_file(arg):
    return _read(arg) if os.path.isfile(arg) else arg


def load_scheme(path):
    return Scheme.parse(_read(path))


def load_language(path, args):
    """Language handle chosen by file extension: .scm, .nfta/.fta, or .trees."""
    ext = os.path.splitext(path)[1]
    text = _read(path)
    if ext == ".scm":
        return pipeline.LanguageHandle.from_scheme(Scheme.parse(text), args.size, args.depth, args.fuel)
    if ext in (".nfta", ".fta"):
        return pipeline.LanguageHandle.from_nfta(fta.Nfta.parse(text), size=args.size)
    if ext == ".trees":
        trees = [parse_tree(line.split("--")[0]) for line in text.splitlines()
                 if line.split("--")[0].strip()]
        return pipeline.LanguageHandle.from_trees(trees)
    raise ValueError(f"{path}: expected a .scm, .nfta or .trees file")


def _bounds(args, *keys):
    names = {"depth": args.depth, "fuel": args.fuel, "size": args.size, "nmax": args.nmax,
             "stre-bound": args.stre_bound}
    return "bounds: " + " ".join(f"{k}={names[k]}" for k in keys)


def _tri(rep, r):
    rep.add(f"result: {r}")
    for k, v in r.bounds.items():
        rep.add(f"  {k}: {v}")
    rep.verdict = r.kind


# ---------------------------------------------------------------- commands

def cmd_check(args, rep):
    g = load_scheme(args.file)
    typecheck(g)
    s = check_safety(g)
    rep.add("typecheck: ok", f"{'safe' if s.verdict else s}, order {scheme_order(g)}")
    rep.verdict = "yes" if s.verdict else "no"


def cmd_bt(args, rep):
    g = load_scheme(args.file)
    typecheck(g)
    t = bohm_prefix(g, args.depth, args.fuel)
    complete = UNKNOWN not in t.labels()
    rep.add(_bounds(args, "depth", "fuel"), str(t), f"complete: {'yes' if complete else 'no'}")
    rep.verdict = "yes" if complete else "unknown"


def cmd_enum(args, rep):
    g = load_scheme(args.file)
    e = language_enumerate(g, args.size, args.depth, args.fuel)
    rep.add(_bounds(args, "size", "depth", "fuel"), f"members: {len(e.members)}")
    rep.add(*[f"  {t}" for t in e.members])
    rep.add(f"saturated: {'yes' if e.saturated else 'no'}")
    rep.verdict = "yes" if e.saturated else "unknown"


def cmd_reduce(args, rep):
    g = load_scheme(args.file)
    r = order_reduce.reduce_scheme(g)
    out = r.scheme.to_text()
    rep.add(f"order {scheme_order(g)} -> {scheme_order(r.scheme)}",
            f"variables: {','.join(r.variables) or '-'}  s: {r.s}", out)
    rep.artifact = out
    rep.verdict = "yes"


def cmd_derived(args, rep):
    text = _read(args.file)
    if args.file.endswith(".scm"):
        g = Scheme.parse(text)
        # order-0 schemes denote regular trees; otherwise walk a Böhm tree prefix
        t = order_reduce.regular_tree_of(g) if scheme_order(g) == 0 else bohm_prefix(g, args.depth, args.fuel)
        base, xs, s = order_reduce.read_header(g.comments)
    else:
        t = RegularTree.parse(text)
        base, xs, s = order_reduce.read_header(_comments(text))
    if base is None:
        raise ValueError("the header comment must list the base alphabet (`base: a/2 ...`)")
    d = order_reduce.derived_tree(t, s, base, args.depth, args.fuel)
    complete = UNKNOWN not in d.labels()
    rep.add(_bounds(args, "depth", "fuel"), f"X: {','.join(xs) or '-'}  s: {s}", str(d))
    rep.verdict = "yes" if complete else "unknown"


def cmd_game(args, rep):
    a = cost.BAutomaton.parse(_read(args.automaton))
    t = RegularTree.parse(_read(args.tree))
    v = cost.accepts_bounded(a, t, args.nmax, args.fuel)
    rep.add(_bounds(args, "nmax", "fuel"), f"automaton: {'one-way' if a.one_way() else 'two-way'}", str(v))
    rep.verdict = {"accepted": "yes", "rejected": "no"}.get(v.kind, "unknown")


def cmd_stre_norm(args, rep):
    s = stre.parse(_text_or_file(args.expr))
    n = stre.normalize(s)
    rep.add(f"input: {stre.show(s)}", f"normal form: {stre.show(n)}")
    rep.verdict = "yes"


def cmd_stre_pure(args, rep):
    s = stre.parse(_text_or_file(args.expr))
    ps = stre.pure_products(s)
    rep.add(f"input: {stre.show(s)}", f"pure products: {len(ps)}")
    rep.add(*[f"  {stre.show(p)}" for p in ps])
    rep.verdict = "yes"


def cmd_dc_regular(args, rep):
    b = fta.Nfta.parse(_read(args.file))
    d = pipeline.downward_closure_regular(b)
    out = d.to_text()
    rep.add(f"states: {len(d.states)}  transitions: {len(d.transitions)}", out)
    rep.artifact = out
    rep.verdict = "yes"


def cmd_dc_search(args, rep):
    L = load_language(args.file, args)
    cand, lines, r = pipeline.downward_closure_search(L, args.stre_bound, args.nmax)
    rep.add(_bounds(args, "stre-bound", "size", "depth", "fuel", "nmax"), *lines)
    if cand is not None:
        rep.add(f"candidate: {stre.show(cand)}")
        rep.artifact = stre.show(cand) + "\n"
    _tri(rep, r)


def cmd_diagonal(args, rep):
    sigma = sorted(x for x in args.sigma.split(",") if x)
    rep.add(f"sigma: {{{','.join(sigma)}}}")
    if args.file.endswith(".rtree"):
        t = RegularTree.parse(_read(args.file))
        letters = dict(t.letters())
        letters.setdefault("nd", 2)
        letters.setdefault("bot", 0)
        a = pipeline.diagonal_automaton(sigma, RankedAlphabet(letters, nd="nd", bot="bot"))
        arena = cost.build_arena(a, t)
        rep.add(_bounds(args, "nmax"), "route: diagonal automaton game")
        reached = 0
        for n in range(1, args.nmax + 1):
            if cost.n_wins(arena, n - 1):
                break
            reached = n
        rep.add(f"largest n with an n-large resolution (up to nmax): {reached}")
        rep.verdict = "yes" if reached == args.nmax else "no"
        return
    L = load_language(args.file, args)
    if L.kind == "nfta":
        rep.add("route: threshold search on the automaton")
        _tri(rep, pipeline.diagonal_regular(L.obj, sigma, args.size))
        return
    best, r = pipeline.diagonal_bruteforce(L, sigma, args.nmax)
    rep.add(_bounds(args, "size", "depth", "fuel", "nmax"), "route: enumeration",
            f"witnessed_max: {best}")
    _tri(rep, r)


def cmd_sup(args, rep):
    p = stre.parse_product(_text_or_file(args.product))
    L = load_language(args.file, args)
    rep.add(_bounds(args, "size", "nmax"), f"product: {stre.show(p)}")
    _tri(rep, pipeline.sup_check(p, L, args.nmax))


def cmd_empty(args, rep):
    L = load_language(args.file, args)
    rep.add(_bounds(args, "size", "nmax"), f"handle: {L.kind}")
    _tri(rep, pipeline.emptiness_via_sup(L, args.nmax))


COMMANDS = {
    "check": (cmd_check, ["file"], "typecheck a scheme, report safety and order"),
    "bt": (cmd_bt, ["file"], "Böhm tree prefix of a scheme"),
    "enum": (cmd_enum, ["file"], "language members up to --size"),
    "reduce": (cmd_reduce, ["file"], "order reduction of a safe scheme"),
    "derived": (cmd_derived, ["file"], "derived tree of a lambda-tree (.ltree or reduced .scm)"),
    "game": (cmd_game, ["automaton", "tree"], "bounded acceptance of a regular tree"),
    "stre-norm": (cmd_stre_norm, ["expr"], "normal form of an expression"),
    "stre-pure": (cmd_stre_pure, ["expr"], "pure products of an expression"),
    "dc-regular": (cmd_dc_regular, ["file"], "downward closure of an automaton"),
    "dc-search": (cmd_dc_search, ["file"], "search for an expression of the downward closure"),
    "diagonal": (cmd_diagonal, ["file"], "diagonal problem for --sigma"),
    "sup": (cmd_sup, ["product", "file"], "is the product below the closure of the language"),
    "empty": (cmd_empty, ["file"], "emptiness decided through the SUP gadget"),
}


def _positive(text):
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser():
    ap = argparse.ArgumentParser(prog="hoclosure", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, positionals, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        for pos in positionals:
            p.add_argument(pos)
        p.add_argument("--depth", type=_positive, default=12)
        p.add_argument("--fuel", type=_positive, default=10**5)
        p.add_argument("--size", type=_positive, default=12)
        p.add_argument("--nmax", type=_positive, default=6)
        p.add_argument("--stre-bound", type=_positive, default=9)
        p.add_argument("--sigma", default="")
        p.add_argument("--out")
    return ap


def run(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    rep = Report(args.command, args)
    fn = COMMANDS[args.command][0]
    try:
        fn(args, rep)
    except (OSError, ValueError, RecursionError) as e:
        where = next((getattr(args, k) for k in ("file", "automaton", "expr") if hasattr(args, k)), "")
        print(f"error: {where}: {e}" if where else f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    text = rep.text()
    stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(rep.artifact if rep.artifact is not None else text)
    return 0 if rep.verdict in ("yes", "no") else EXIT_UNKNOWN


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
