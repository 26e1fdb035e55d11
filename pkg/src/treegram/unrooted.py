"""Centers, re-rooting and isomorphism for compressed unrooted trees."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Sequence

from ._util import NameSupply
from .canonize import iso_rooted
from .grammar import (
    NONTERMINAL,
    PARAM,
    TERMINAL,
    Grammar,
    GrammarError,
    Rule,
    Sym,
    even_grammar,
    sym_map,
    sym_postorder,
)
from .normal import (
    HOLE_STAT,
    Apply,
    Branch,
    Compose,
    Hole,
    NormalGrammar,
    Stat,
    apply_stat,
    compose_stat,
    node_stat,
    normalize,
    stats,
)
from .slp import DEFAULT_POLICY, EqualityPolicy, Slp, SlpStore
from .terms import DEFAULT_ORDER, LabelOrder

__all__ = [
    "CompressedPath",
    "PathError",
    "Expansion",
    "CenterStep",
    "mixed_stats",
    "find_center",
    "resolve_path",
    "expand_path",
    "rooty",
    "reroot",
    "center_rooted",
    "iso_unrooted",
]

Address = tuple[int, ...]


class PathError(GrammarError):
    pass


@dataclass(frozen=True)
class CompressedPath:
    """Pairs (A_i, u_i): a nonterminal and an address inside its right-hand side."""

    pairs: tuple[tuple[str, Address], ...]

    def __str__(self) -> str:
        return " / ".join(f"{a}@{'.'.join(map(str, u)) if u else 'ε'}" for a, u in self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    @classmethod
    def parse(cls, text: str) -> "CompressedPath":
        pairs = []
        for seg in text.split("/"):
            m = re.fullmatch(r"\s*([A-Za-z_][A-Za-z0-9_]*)@(ε|e|[0-9]+(?:\.[0-9]+)*)\s*", seg)
            if not m:
                raise PathError(f"malformed path segment {seg.strip()!r}")
            addr = m.group(2)
            u = () if addr in ("ε", "e") else tuple(int(x) for x in addr.split("."))
            if any(x < 1 for x in u):
                raise PathError(f"address steps start at 1: {seg.strip()!r}")
            pairs.append((m.group(1), u))
        return cls(tuple(pairs))


def _rules(g: Grammar | NormalGrammar) -> tuple[dict[str, Rule], str]:
    gg = g.to_grammar() if isinstance(g, NormalGrammar) else g
    return gg.rules, gg.start


def _sym_at(rhs: Sym, u: Address) -> Sym:
    node = rhs
    for step in u:
        if not 1 <= step <= len(node.kids):
            raise PathError(f"address {'.'.join(map(str, u))} leaves the right-hand side")
        node = node.kids[step - 1]
    return node


def _check_path(rules: dict[str, Rule], start: str, p: CompressedPath, full: bool = True) -> None:
    if not p.pairs:
        raise PathError("empty path")
    if p.pairs[0][0] != start:
        raise PathError(f"a path starts at the start symbol {start}, not {p.pairs[0][0]}")
    for i, (a, u) in enumerate(p.pairs):
        if a not in rules:
            raise PathError(f"unknown nonterminal {a}")
        node = _sym_at(rules[a].rhs, u)
        if i + 1 < len(p.pairs):
            if node.kind != NONTERMINAL or node.name != p.pairs[i + 1][0]:
                raise PathError(f"{a}@{u}: expected an occurrence of {p.pairs[i + 1][0]}")
        elif full and node.kind != TERMINAL:
            raise PathError("the last pair must address a terminal")


# ------------------------------------------------------------- statistics

def mixed_stats(g: NormalGrammar, t: Sym, table: dict[str, Stat] | None = None) -> Stat:
    """Stats of val(t) for a tree or context t over terminals, nonterminals and y."""
    st = stats(g) if table is None else table
    done: dict[int, Stat] = {}
    for node in sym_postorder(t):
        kids = [done[id(k)] for k in node.kids]
        if node.kind == PARAM:
            s = HOLE_STAT
        elif node.kind == TERMINAL:
            s = node_stat(kids)
        else:
            base = st[node.name]
            if not kids:
                s = base
            else:
                (arg,) = kids
                s = compose_stat(base, arg) if arg.is_context else apply_stat(base, arg)
        done[id(node)] = s
    return done[id(t)]


# --------------------------------------------------------- center search

_Y = Sym(PARAM, "y")


def _plug(ctx: Sym, sub: Sym) -> Sym:
    return sym_map(ctx, lambda n, kids: sub if n.kind == PARAM else Sym(n.kind, n.name, kids))


@dataclass(frozen=True)
class CenterStep:
    """One call center(t_l, A, t_r, p) of the search, for instrumentation."""

    t_l: Sym
    nonterminal: str
    t_r: Sym | None
    path: CompressedPath
    candidates: int = 0


def _nt(name: str, *kids: Sym) -> Sym:
    return Sym(NONTERMINAL, name, list(kids))


def find_center(
    g: NormalGrammar,
    trace: Callable[[CenterStep], None] | None = None,
) -> CompressedPath:
    """Compressed path to the unique center of val(g) read as an unrooted tree."""
    st = stats(g)
    d = st[g.start].diameter
    if d % 2:
        raise GrammarError(f"the tree has odd diameter {d} and two centers; subdivide it first (even_grammar)")
    tl = HOLE_STAT
    tl_sym: Sym = _Y
    A = g.start
    tr: Stat | None = None
    tr_sym: Sym | None = None
    path: list[tuple[str, Address]] = []
    cands = 0
    while True:
        if trace is not None:
            trace(CenterStep(tl_sym, A, tr_sym, CompressedPath(tuple(path)), cands))
        p = g.prods[A]
        if isinstance(p, (Apply, Compose)):
            B, C = (p.ctx, p.arg) if isinstance(p, Apply) else (p.outer, p.inner)
            left = compose_stat(tl, st[B])
            right = st[C] if tr is None else apply_stat(st[C], tr)
            if left.ecc <= right.height:  # type: ignore[operator]
                tl = left
                if trace is not None:
                    tl_sym = _plug(tl_sym, _nt(B, _Y))
                path.append((A, (1,)))
                A = C
            else:
                if trace is not None:
                    tr_sym = _nt(C) if tr_sym is None else _nt(C, tr_sym)
                tr = right
                path.append((A, ()))
                A = B
            continue
        assert isinstance(p, (Branch, Hole))
        if isinstance(p, Branch):
            kids, s = list(p.args), -1
        else:
            kids, s = list(p.left) + [""] + list(p.right), len(p.left)
        kstats = [tr if i == s else st[c] for i, c in enumerate(kids)]
        found = []
        for i, c in enumerate(kids):
            if i == s:
                continue
            layer = node_stat(kstats[:i] + [HOLE_STAT] + kstats[i + 1:])
            ti = compose_stat(tl, layer)
            if ti.ecc <= st[c].height:  # type: ignore[operator]
                found.append((i, ti))
        # the center is unique, so at most one child can claim it
        assert len(found) <= 1, "two children claim the center"
        if not found:
            path.append((A, ()))
            return CompressedPath(tuple(path))
        i, ti = found[0]
        cands = len(found)
        if trace is not None:
            syms = [tr_sym if j == s else (_Y if j == i else _nt(c)) for j, c in enumerate(kids)]
            tl_sym = _plug(tl_sym, Sym(TERMINAL, p.label, syms))  # type: ignore[arg-type]
        tl, tr, tr_sym = ti, None, None
        path.append((A, (i + 1,)))
        A = kids[i]


# --------------------------------------------------------- path addresses

def _param_addresses(rules: dict[str, Rule], order: Sequence[str], store: SlpStore) -> dict[tuple[str, str], int]:
    """SLP rule for the Dewey address of each parameter inside val(A)."""
    out: dict[tuple[str, str], int] = {}
    for name in order:
        rule = rules[name]
        if not rule.params:
            continue
        found: dict[int, dict[str, int]] = {}
        for node in sym_postorder(rule.rhs):
            here: dict[str, int] = {}
            if node.kind == PARAM:
                here[node.name] = store.add(())
            for i, kid in enumerate(node.kids, 1):
                for q, rest in found[id(kid)].items():
                    if q in here:
                        raise PathError(f"{name} copies parameter {q}; addresses need a linear grammar")
                    if node.kind == TERMINAL:
                        here[q] = store.add((str(i), rest))
                    else:
                        callee = rules[node.name].params[i - 1]
                        key = (node.name, callee)
                        if key in out:
                            here[q] = store.add((out[key], rest))
            found[id(node)] = here
        for q, r in found[id(rule.rhs)].items():
            out[(name, q)] = r
    return out


def resolve_path(g: Grammar | NormalGrammar, p: CompressedPath) -> tuple[Slp, int]:
    """Dewey address of val_G(p) in val(g) as an SLP over step numbers, plus its depth."""
    rules, start = _rules(g)
    _check_path(rules, start, p)
    order = g.order
    store = SlpStore()
    pa = _param_addresses(rules, order, store)
    items: list[int | str] = []
    for a, u in p.pairs:
        node = rules[a].rhs
        for step in u:
            if node.kind == TERMINAL:
                items.append(str(step))
            else:
                key = (node.name, rules[node.name].params[step - 1])
                if key not in pa:
                    raise PathError(f"{a}@{u}: the argument is deleted by {node.name}")
                items.append(pa[key])
            node = node.kids[step - 1]
    root = store.add(items)
    return Slp(store, root), store.lengths[root]


def address_tuple(s: Slp) -> Address:
    return tuple(int(x) for x in s.expand())


# ------------------------------------------------------------- expansion

_MARK = "\x00mark"


@dataclass(frozen=True)
class Expansion:
    t: Sym  # tree over terminals and nonterminals
    u: Address  # the marked node
    sigma: str
    delta: str


def _replace_at(t: Sym, u: Address, sub: Sym) -> Sym:
    if not u:
        return sub
    spine = [t]
    for step in u[:-1]:
        spine.append(spine[-1].kids[step - 1])
    out = sub
    for node, step in zip(reversed(spine), reversed(u)):
        kids = list(node.kids)
        kids[step - 1] = out
        out = Sym(node.kind, node.name, kids)
    return out


def _instantiate(rules: dict[str, Rule], call: Sym) -> Sym:
    rule = rules[call.name]
    args = dict(zip(rule.params, call.kids))
    return sym_map(rule.rhs, lambda n, kids: args[n.name] if n.kind == PARAM else Sym(n.kind, n.name, kids))


def _find(t: Sym, label: str) -> Address:
    stack: list[tuple[Sym, Address]] = [(t, ())]
    while stack:
        node, u = stack.pop()
        if node.kind == TERMINAL and node.name == label:
            return u
        stack.extend((k, u + (i,)) for i, k in enumerate(node.kids, 1))
    raise PathError("marked node lost during expansion")


def expand_path(g: Grammar | NormalGrammar, p: CompressedPath) -> Expansion:
    """The p-expansion (t, u, sigma, delta): a small tree with a terminal root that holds the node."""
    rules, start = _rules(g)
    _check_path(rules, start, p)
    a, u = p.pairs[-1]
    target = _sym_at(rules[a].rhs, u)
    sigma = target.name
    s = _replace_at(rules[a].rhs, u, Sym(TERMINAL, _MARK, target.kids))
    for a, u in reversed(p.pairs[:-1]):
        t = rules[a].rhs
        if u:
            s = _replace_at(t, u, s)
        else:
            # the path continues into the callee at the root of t
            args = dict(zip(rules[t.name].params, t.kids))
            s = sym_map(s, lambda n, kids: args[n.name] if n.kind == PARAM else Sym(n.kind, n.name, kids))
    while s.kind == NONTERMINAL:
        s = _instantiate(rules, s)
    mark = _find(s, _MARK)
    node = _sym_at(s, mark)
    s = _replace_at(s, mark, Sym(TERMINAL, sigma, node.kids))
    return Expansion(s, mark, sigma, s.name)


# ---------------------------------------------------------------- reroot

def rooty(c: Sym, prime: Callable[[str], str] | None = None) -> Sym:
    """Reverse the root-to-y path of a context; rank-1 calls B(y) become B'(y)."""
    layers: list[Sym] = []
    node = c
    while node.kind != PARAM:
        idx = [i for i, k in enumerate(node.kids) if any(n.kind == PARAM for n in sym_postorder(k))]
        if len(idx) != 1:
            raise GrammarError("a context needs exactly one parameter")
        i = idx[0]
        if node.kind == NONTERMINAL:
            if prime is None:
                raise GrammarError("rooty over a nonterminal needs primed names")
            layers.append(_nt(prime(node.name), _Y))
        else:
            kids = list(node.kids)
            kids[i] = _Y
            layers.append(Sym(TERMINAL, node.name, kids))
        node = node.kids[i]
    acc: Sym = _Y
    for layer in layers:
        acc = _plug(layer, acc)
    return acc


def reroot(g: NormalGrammar, p: CompressedPath) -> NormalGrammar:
    """A grammar for val(g) re-rooted at the node val_G(p) (unordered reading)."""
    ex = expand_path(g, p)
    if not ex.u:
        return g
    base = g.to_grammar()
    rules = dict(base.rules)
    names = NameSupply(set(rules) | base.terminals())
    primed: dict[str, str] = {}

    def prime(b: str) -> str:
        if b not in primed:
            primed[b] = names.fresh(f"{b}_r")
            todo.append(b)
        return primed[b]

    todo: list[str] = []
    chain = [ex.t]
    for step in ex.u:
        chain.append(chain[-1].kids[step - 1])
    i = ex.u[0]
    rest = [k for j, k in enumerate(ex.t.kids, 1) if j != i]
    ctx = _replace_at(chain[1], ex.u[1:], _Y)
    top = rooty(ctx, prime)
    target = chain[-1]
    new_start = Sym(TERMINAL, ex.sigma, list(target.kids) + [_plug(top, Sym(TERMINAL, ex.delta, rest))])
    while todo:
        b = todo.pop()
        pb = g.prods[b]
        if isinstance(pb, Hole):
            rules[primed[b]] = rules[b]
        else:
            assert isinstance(pb, Compose)
            outer, inner = prime(pb.outer), prime(pb.inner)
            rules[primed[b]] = Rule(("y",), _nt(inner, _nt(outer, _Y)))
    rules[g.start] = Rule((), new_start)
    return normalize(Grammar(rules, g.start))


def center_rooted(g: Grammar | NormalGrammar) -> NormalGrammar:
    """Subdivide, then re-root at the (now unique) center."""
    gg = g.to_grammar() if isinstance(g, NormalGrammar) else g
    e = normalize(even_grammar(gg))
    return reroot(e, find_center(e))


def iso_unrooted(
    g1: Grammar | NormalGrammar,
    g2: Grammar | NormalGrammar,
    order: LabelOrder = DEFAULT_ORDER,
    policy: EqualityPolicy = DEFAULT_POLICY,
) -> bool:
    """Are val(g1) and val(g2) isomorphic as unrooted unordered trees?"""
    return iso_rooted(center_rooted(g1), center_rooted(g2), order, policy)
