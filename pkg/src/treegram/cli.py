"""The ``treegram`` command line.

Exit codes follow diff: 0 for equal/isomorphic/success, 1 for not, 2 for errors.
Results go to stdout or to output files; timing and messages go to stderr.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .bisim import bcanon_grammar, bisim_equal
from .canonize import canonize, iso_rooted, prepare
from .grammar import (
    EvalTooLarge,
    Grammar,
    TERMINAL,
    GrammarError,
    eval_grammar,
    even_grammar,
    format_grammar,
    height_table,
    parse_grammar,
    size_table,
    sym_postorder,
    tree_to_dag,
)
from .normal import NormalGrammar, normalize, stats
from .slp import EqualityPolicy
from .st import (
    BudgetExceeded,
    ExpansionBudget,
    QbfSyntaxError,
    bisim_st,
    iso_st,
    qbf_eval,
    qbf_parse,
    qbf_to_st,
)
from .terms import TermSyntaxError, TreeError, parse_term, split_rank, unparse
from .unrooted import CompressedPath, center_rooted, find_center, iso_unrooted, reroot, resolve_path

__all__ = ["CliConfig", "main"]


@dataclass
class CliConfig:
    seed: int = 0
    prime_count: int = 3
    exact_threshold: int = 10**6
    max_nodes: int = 10**7
    exact: bool = False
    budget: ExpansionBudget = field(default_factory=ExpansionBudget)

    @property
    def policy(self) -> EqualityPolicy:
        return EqualityPolicy(
            mode="exact" if self.exact else "fingerprint",
            prime_count=self.prime_count,
            seed=self.seed,
            exact_threshold=self.exact_threshold,
        )


class CliError(Exception):
    pass


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonnegative(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _config(ns: argparse.Namespace) -> CliConfig:
    return CliConfig(
        seed=ns.seed,
        prime_count=ns.primes,
        exact_threshold=ns.exact_threshold,
        max_nodes=ns.max_nodes,
        exact=ns.exact,
        budget=ExpansionBudget(ns.budget_nodes, ns.budget_calls),
    )


def _read(path: str) -> str:
    try:
        return sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _load(path: str) -> Grammar:
    try:
        return parse_grammar(_read(path))
    except GrammarError as exc:
        raise CliError(f"{path}: {exc}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _need_linear(g: Grammar, path: str) -> None:
    if not g.linear:
        raise CliError(f"{path}: grammar copies parameters; use --st")


def _is_ranked(g: Grammar) -> bool:
    """True when every terminal already carries its rank suffix (e.g. a canon output)."""
    seen = False
    for rule in g.rules.values():
        for node in sym_postorder(rule.rhs):
            if node.kind == TERMINAL:
                if split_rank(node.name)[1] != len(node.kids):
                    return False
                seen = True
    return seen


def _emit_tree(ng: NormalGrammar, cfg: CliConfig) -> None:
    t = eval_grammar(ng.to_grammar(), cfg.max_nodes)
    print(unparse(t))


# ---------------------------------------------------------------- commands

def cmd_iso(ns: argparse.Namespace, cfg: CliConfig) -> int:
    a, b = _load(ns.a), _load(ns.b)
    if ns.st:
        same = iso_st(a, b, cfg.budget, policy=cfg.policy)
    else:
        _need_linear(a, ns.a)
        _need_linear(b, ns.b)
        if ns.unrooted:
            same = iso_unrooted(a, b, policy=cfg.policy)
        else:
            ranked = _is_ranked(a) and _is_ranked(b)
            same = iso_rooted(a, b, policy=cfg.policy, ranked=ranked)
    print("ISO" if same else "NOT-ISO")
    return 0 if same else 1


def cmd_bisim(ns: argparse.Namespace, cfg: CliConfig) -> int:
    a, b = _load(ns.a), _load(ns.b)
    if ns.st:
        same = bisim_st(a, b, cfg.budget, policy=cfg.policy)
    else:
        _need_linear(a, ns.a)
        _need_linear(b, ns.b)
        ranked = _is_ranked(a) and _is_ranked(b)
        same = bisim_equal(a, b, policy=cfg.policy, ranked=ranked)
    print("BISIM" if same else "NOT-BISIM")
    return 0 if same else 1


def _canon_like(ns: argparse.Namespace, cfg: CliConfig, fn: Callable) -> int:
    g = _load(ns.input)
    _need_linear(g, ns.input)
    out = fn(prepare(g, cfg.policy, ranked=_is_ranked(g)), policy=cfg.policy)
    _write(ns.output, format_grammar(out.to_grammar()))
    if ns.emit_tree:
        _emit_tree(out, cfg)
    return 0


def cmd_canon(ns: argparse.Namespace, cfg: CliConfig) -> int:
    return _canon_like(ns, cfg, canonize)


def cmd_bcanon(ns: argparse.Namespace, cfg: CliConfig) -> int:
    return _canon_like(ns, cfg, bcanon_grammar)


def cmd_center(ns: argparse.Namespace, cfg: CliConfig) -> int:
    g = _load(ns.input)
    _need_linear(g, ns.input)
    ng = normalize(even_grammar(g) if ns.even else g)
    p = find_center(ng)
    _, depth = resolve_path(ng, p)
    print(f"path: {p}")
    print(f"depth: {depth}")
    return 0


def cmd_reroot(ns: argparse.Namespace, cfg: CliConfig) -> int:
    g = _load(ns.input)
    _need_linear(g, ns.input)
    if ns.at_center:
        out = center_rooted(g)
    else:
        out = reroot(normalize(g), CompressedPath.parse(ns.path))
    _write(ns.output, format_grammar(out.to_grammar()))
    return 0


def _fmt(v: int | None) -> str:
    return "-" if v is None else str(v)


def cmd_stats(ns: argparse.Namespace, cfg: CliConfig) -> int:
    g = _load(ns.input)
    ng = None
    if g.linear:
        try:
            ng = normalize(g)
        except GrammarError:
            ng = None
    if ng is not None:
        table = stats(ng)
        print("nonterminal rank size height diameter rty ecc")
        for name in ng.order:
            s = table[name]
            cells = [name, ng.rank(name), s.size, s.height, s.diameter, _fmt(s.rty), _fmt(s.ecc)]
            print(" ".join(map(str, cells)))
        top = table[ng.start]
        print(f"size: {top.size}")
        print(f"height: {top.height}")
        print(f"diameter: {top.diameter}")
    else:
        # parameters count as leaves, so a rank-k entry is the size of its pattern tree
        sizes, heights = size_table(g), height_table(g)
        print("nonterminal rank size height")
        for name in g.order:
            c, coeffs = sizes[name]
            hc, hd = heights[name]
            h = max(x for x in (hc, *hd) if x is not None)
            print(f"{name} {g.rank(name)} {c + sum(coeffs)} {h}")
        c, _ = sizes[g.start]
        hc, _ = heights[g.start]
        print(f"size: {c}")
        print(f"height: {hc}")
    print(f"grammar-size: {g.size}")
    return 0


def cmd_eval(ns: argparse.Namespace, cfg: CliConfig) -> int:
    g = _load(ns.input)
    t = eval_grammar(g, cfg.max_nodes)
    _write(ns.output, unparse(t) + "\n")
    return 0


def cmd_compress(ns: argparse.Namespace, cfg: CliConfig) -> int:
    try:
        t = parse_term(_read(ns.input))
    except (TermSyntaxError, TreeError) as exc:
        raise CliError(f"{ns.input}: {exc}") from None
    _write(ns.output, format_grammar(tree_to_dag(t)))
    return 0


def cmd_qbf(ns: argparse.Namespace, cfg: CliConfig) -> int:
    f = qbf_parse(ns.formula)
    a, b = qbf_to_st(f)
    stem = Path(ns.prefix)
    pa, pb = stem.with_name(stem.name + "A.st"), stem.with_name(stem.name + "B.st")
    pa.write_text(format_grammar(a), encoding="utf-8")
    pb.write_text(format_grammar(b), encoding="utf-8")
    print(f"wrote {pa} {pb}", file=sys.stderr)
    print(f"TRUTH: {'true' if qbf_eval(f) else 'false'}")
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="treegram", description="Algorithms on grammar-compressed trees.")
    ap.add_argument("--seed", type=_nonnegative, default=0, help="fingerprint seed")
    ap.add_argument("--primes", type=_positive, default=3, help="number of fingerprint primes")
    ap.add_argument("--exact-threshold", type=_nonnegative, default=10**6,
                    help="settle equal fingerprints exactly up to this length")
    ap.add_argument("--exact", action="store_true", help="decide string equality by expansion only")
    ap.add_argument("--max-nodes", type=_positive, default=10**7, help="largest tree to decompress")
    ap.add_argument("--budget-nodes", type=_positive, default=10**6,
                    help="dag-node budget for non-linear grammars")
    ap.add_argument("--budget-calls", type=_positive, default=10**5,
                    help="instantiation budget for non-linear grammars")
    ap.add_argument("-q", "--quiet", action="store_true", help="suppress timing on stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, fn, help_ in (("iso", cmd_iso, "unordered isomorphism"), ("bisim", cmd_bisim, "bisimilarity")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("a")
        p.add_argument("b")
        p.add_argument("--st", action="store_true", help="allow non-linear grammars (full expansion)")
        if name == "iso":
            p.add_argument("--unrooted", action="store_true")
        p.set_defaults(func=fn)

    for name, fn in (("canon", cmd_canon), ("bcanon", cmd_bcanon)):
        p = sub.add_parser(name, help=f"write a grammar for the {name} of the input")
        p.add_argument("input")
        p.add_argument("-o", "--output")
        p.add_argument("--emit-tree", action="store_true", help="also print the decompressed tree")
        p.set_defaults(func=fn)

    p = sub.add_parser("center", help="print a compressed path to the center")
    p.add_argument("input")
    p.add_argument("--even", action="store_true", help="subdivide every edge first")
    p.set_defaults(func=cmd_center)

    p = sub.add_parser("reroot", help="re-root at a compressed path")
    p.add_argument("input")
    where = p.add_mutually_exclusive_group(required=True)
    where.add_argument("--path")
    where.add_argument("--at-center", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_reroot)

    p = sub.add_parser("stats", help="exact statistics per nonterminal")
    p.add_argument("input")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("eval", help="decompress to a term")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compress", help="term file to dag grammar")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("qbf", help="write the grammar pair for a QBF and print its truth value")
    p.add_argument("formula")
    p.add_argument("--prefix", default="qbf", help="output files are PREFIXA.st and PREFIXB.st")
    p.set_defaults(func=cmd_qbf)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    # exact counts of huge trees can have far more than 4300 digits
    if hasattr(sys, "set_int_max_str_digits"):
        sys.set_int_max_str_digits(0)
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    cfg = _config(ns)
    t0 = time.perf_counter()
    try:
        code = ns.func(ns, cfg)
    except EvalTooLarge as exc:
        print(f"error: tree has {exc.size} nodes (limit {exc.limit})", file=sys.stderr)
        print(f"size: {exc.size}")
        return 2
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CliError, GrammarError, QbfSyntaxError, TermSyntaxError, TreeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 2
    if not ns.quiet:
        print(f"[{ns.command}] {time.perf_counter() - t0:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
