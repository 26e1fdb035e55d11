"""Normal-form linear grammars with nonterminals of rank at most one.

Production types::

    1  A    -> f(A1, ..., Ak)             Branch
    2  A    -> B(C)                       Apply
    3  A(y) -> f(A1, ..., Ai, y, ..., Ak)  Hole
    4  A(y) -> B(C(y))                    Compose
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from ._util import NameSupply, postorder
from .grammar import (
    NONTERMINAL,
    PARAM,
    TERMINAL,
    Grammar,
    GrammarError,
    Rule,
    Sym,
    eval_grammar,
    sym_postorder,
)
from .terms import Tree, check_rankable, rank_label

__all__ = [
    "Branch",
    "Apply",
    "Hole",
    "Compose",
    "Production",
    "NormalGrammar",
    "Stat",
    "normalize",
    "stats",
    "ranked_normal",
    "gen_random",
    "RandomParams",
    "node_stat",
    "compose_stat",
    "apply_stat",
    "HOLE_STAT",
]


@dataclass(frozen=True)
class Branch:
    label: str
    args: tuple[str, ...] = ()
    kind = 1
    rank = 0

    @property
    def children(self) -> tuple[str, ...]:
        return self.args


@dataclass(frozen=True)
class Apply:
    ctx: str
    arg: str
    kind = 2
    rank = 0

    @property
    def children(self) -> tuple[str, ...]:
        return (self.ctx, self.arg)


@dataclass(frozen=True)
class Hole:
    label: str
    left: tuple[str, ...] = ()
    right: tuple[str, ...] = ()
    kind = 3
    rank = 1

    @property
    def children(self) -> tuple[str, ...]:
        return self.left + self.right

    @property
    def hole_index(self) -> int:
        """1-based child position of the parameter."""
        return len(self.left) + 1


@dataclass(frozen=True)
class Compose:
    outer: str
    inner: str
    kind = 4
    rank = 1

    @property
    def children(self) -> tuple[str, ...]:
        return (self.outer, self.inner)


Production = Union[Branch, Apply, Hole, Compose]


class NormalGrammar:
    """A normal-form grammar; unreachable nonterminals are pruned on construction."""

    def __init__(self, prods: Mapping[str, Production], start: str) -> None:
        if start not in prods:
            raise GrammarError(f"start symbol {start!r} has no production")
        if prods[start].rank != 0:
            raise GrammarError("start symbol must have rank 0")
        for name, p in prods.items():
            for c, want in _child_ranks(p):
                if c not in prods:
                    raise GrammarError(f"{name}: unknown nonterminal {c!r}")
                if prods[c].rank != want:
                    raise GrammarError(f"{name}: {c} has rank {prods[c].rank}, expected {want}")
        order = postorder([start], lambda n: prods[n].children)
        pos = {n: i for i, n in enumerate(order)}
        for n in order:
            if any(pos[c] >= pos[n] for c in prods[n].children):
                raise GrammarError(f"cyclic nonterminals through {n}")
        self.prods: dict[str, Production] = {n: prods[n] for n in order}
        self.start = start
        self.order: list[str] = order

    def rank(self, name: str) -> int:
        return self.prods[name].rank

    @property
    def size(self) -> int:
        """Total size of the right-hand sides."""
        total = 0
        for p in self.prods.values():
            if isinstance(p, Branch):
                total += 1 + len(p.args)
            elif isinstance(p, Hole):
                total += 2 + len(p.left) + len(p.right)
            elif isinstance(p, Apply):
                total += 2
            else:
                total += 3
        return total

    def of_type(self, kind: int) -> dict[str, Production]:
        return {n: p for n, p in self.prods.items() if p.kind == kind}

    def to_grammar(self) -> Grammar:
        rules = {n: _to_rule(p) for n, p in self.prods.items()}
        return Grammar(rules, self.start)

    def eval(self, max_nodes: int = 10**7, name: str | None = None) -> Tree:
        g = self.to_grammar() if name is None else NormalGrammar(self.prods, name).to_grammar()
        return eval_grammar(g, max_nodes)

    def size_of(self, name: str | None = None) -> int:
        return stats(self)[self.start if name is None else name].size

    def terminals(self) -> set[str]:
        return {p.label for p in self.prods.values() if isinstance(p, (Branch, Hole))}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NormalGrammar):
            return NotImplemented
        return self.start == other.start and self.prods == other.prods

    def __repr__(self) -> str:
        return f"<NormalGrammar {len(self.prods)} nonterminals, size {self.size}, start {self.start}>"


def _child_ranks(p: Production) -> Iterable[tuple[str, int]]:
    if isinstance(p, (Branch, Hole)):
        return [(c, 0) for c in p.children]
    if isinstance(p, Apply):
        return [(p.ctx, 1), (p.arg, 0)]
    return [(p.outer, 1), (p.inner, 1)]


def _to_rule(p: Production) -> Rule:
    y = Sym(PARAM, "y")
    if isinstance(p, Branch):
        return Rule((), Sym(TERMINAL, p.label, [Sym(NONTERMINAL, a) for a in p.args]))
    if isinstance(p, Apply):
        return Rule((), Sym(NONTERMINAL, p.ctx, [Sym(NONTERMINAL, p.arg)]))
    if isinstance(p, Hole):
        kids = [Sym(NONTERMINAL, a) for a in p.left] + [y] + [Sym(NONTERMINAL, a) for a in p.right]
        return Rule(("y",), Sym(TERMINAL, p.label, kids))
    return Rule(("y",), Sym(NONTERMINAL, p.outer, [Sym(NONTERMINAL, p.inner, [y])]))


# ------------------------------------------------------------ normalization

def normalize(g: Grammar | NormalGrammar) -> NormalGrammar:
    """Flatten a linear grammar with ranks <= 1 into the four production types."""
    if isinstance(g, NormalGrammar):
        return g
    if not g.linear:
        raise GrammarError("normalize needs a linear grammar")
    for name, rule in g.rules.items():
        if len(rule.params) > 1:
            raise GrammarError(f"{name} has rank {len(rule.params)}; only ranks 0 and 1 are supported")
    names = NameSupply(set(g.rules) | g.terminals())
    prods: dict[str, Production] = {}
    cons: dict[Production, str] = {}
    # per original nonterminal: ("tree", name) or ("ctx", name or None for the identity)
    info: dict[str, tuple[str, str | None]] = {}

    def new(prod: Production, want: str | None) -> str:
        found = cons.get(prod)
        if found is not None:
            return found
        name = want if want is not None else names.fresh()
        prods[name] = prod
        cons[prod] = name
        return name

    for A in g.order:
        rule = g.rules[A]
        res: dict[int, tuple[str, str | None]] = {}
        for node in sym_postorder(rule.rhs):
            want = A if node is rule.rhs else None
            kids = [res[id(k)] for k in node.kids]
            if node.kind == PARAM:
                r: tuple[str, str | None] = ("ctx", None)
            elif node.kind == TERMINAL:
                holes = [i for i, k in enumerate(kids) if k[0] == "ctx"]
                if not holes:
                    r = ("tree", new(Branch(node.name, tuple(k[1] for k in kids)), want))  # type: ignore[misc]
                else:
                    j = holes[0]
                    hole = Hole(node.name, tuple(k[1] for k in kids[:j]), tuple(k[1] for k in kids[j + 1:]))  # type: ignore[arg-type]
                    inner = kids[j][1]
                    if inner is None:
                        r = ("ctx", new(hole, want))
                    else:
                        r = ("ctx", new(Compose(new(hole, None), inner), want))
            else:
                kind, X = info[node.name]
                if not node.kids:
                    r = (kind, X)
                elif kind == "tree":
                    r = (kind, X)  # the argument is deleted
                elif X is None:
                    r = kids[0]
                else:
                    akind, arg = kids[0]
                    if akind == "tree":
                        r = ("tree", new(Apply(X, arg), want))  # type: ignore[arg-type]
                    elif arg is None:
                        r = ("ctx", X)
                    else:
                        r = ("ctx", new(Compose(X, arg), want))
            res[id(node)] = r
        info[A] = res[id(rule.rhs)]
    kind, root = info[g.start]
    assert kind == "tree" and root is not None
    if root != g.start:
        prods[g.start] = prods[root]
    return NormalGrammar(prods, g.start)


def ranked_normal(g: NormalGrammar) -> NormalGrammar:
    out: dict[str, Production] = {}
    for n, p in g.prods.items():
        if isinstance(p, Branch):
            check_rankable(p.label)
            out[n] = Branch(rank_label(p.label, len(p.args)), p.args)
        elif isinstance(p, Hole):
            check_rankable(p.label)
            out[n] = Hole(rank_label(p.label, len(p.left) + len(p.right) + 1), p.left, p.right)
        else:
            out[n] = p
    return NormalGrammar(out, g.start)


# ---------------------------------------------------------------- statistics

@dataclass(frozen=True)
class Stat:
    """Exact size/height/diameter; contexts also carry rty and ecc of the y-leaf.

    For a context, ``height`` treats y as an ordinary leaf (the h_bot statistic).
    """

    size: int
    height: int
    diameter: int
    rty: int | None = None
    ecc: int | None = None

    @property
    def is_context(self) -> bool:
        return self.rty is not None


HOLE_STAT = Stat(size=1, height=0, diameter=0, rty=0, ecc=0)


def node_stat(kids: list[Stat]) -> Stat:
    """Statistics of a new root above the given children (at most one context)."""
    size = 1
    top1 = top2 = -1
    diam = 0
    hole = None
    for i, k in enumerate(kids):
        size += k.size
        diam = max(diam, k.diameter)
        h = k.height
        if h > top1:
            top1, top2 = h, top1
        elif h > top2:
            top2 = h
        if k.rty is not None:
            hole = i
    if top1 >= 0:
        diam = max(diam, top1 + 1 + (top2 + 1 if top2 >= 0 else 0))
    height = 1 + top1
    if hole is None:
        return Stat(size, height, diam)
    c = kids[hole]
    others = max((k.height for i, k in enumerate(kids) if i != hole), default=-1)
    assert c.rty is not None and c.ecc is not None
    return Stat(size, height, diam, rty=c.rty + 1, ecc=max(c.ecc, c.rty + 2 + others))


def compose_stat(t: Stat, u: Stat) -> Stat:
    """Statistics of the context t[u]."""
    assert t.rty is not None and t.ecc is not None and u.rty is not None and u.ecc is not None
    return Stat(
        size=t.size + u.size - 1,
        height=max(t.height, t.rty + u.height),
        diameter=max(t.diameter, u.diameter, t.ecc + u.height),
        rty=t.rty + u.rty,
        ecc=max(u.ecc, t.ecc + u.rty),
    )


def apply_stat(t: Stat, s: Stat) -> Stat:
    """Statistics of the tree t[s]."""
    assert t.rty is not None and t.ecc is not None
    return Stat(
        size=t.size + s.size - 1,
        height=max(t.height, t.rty + s.height),
        diameter=max(t.diameter, s.diameter, t.ecc + s.height),
    )


def stats(g: NormalGrammar) -> dict[str, Stat]:
    """Bottom-up exact statistics for every nonterminal."""
    st: dict[str, Stat] = {}
    for n in g.order:
        p = g.prods[n]
        if isinstance(p, Branch):
            st[n] = node_stat([st[a] for a in p.args])
        elif isinstance(p, Hole):
            st[n] = node_stat([st[a] for a in p.left] + [HOLE_STAT] + [st[a] for a in p.right])
        elif isinstance(p, Apply):
            st[n] = apply_stat(st[p.ctx], st[p.arg])
        else:
            st[n] = compose_stat(st[p.outer], st[p.inner])
    return st


# ------------------------------------------------------------ random grammars

@dataclass(frozen=True)
class RandomParams:
    nonterminals: int = 8
    max_arity: int = 3
    labels: tuple[str, ...] = ("f", "g", "h", "a", "b")
    # relative weights of the production types 1..4
    weights: tuple[float, float, float, float] = (3.0, 2.0, 2.0, 1.5)
    leaf_labels: tuple[str, ...] = field(default=())


def gen_random(seed: int, params: RandomParams = RandomParams()) -> NormalGrammar:
    """A random normal-form grammar, deterministic in the seed."""
    if params.nonterminals < 1 or params.max_arity < 0 or not params.labels:
        raise ValueError("random grammar parameters must be positive")
    rng = random.Random(seed)
    rank0: list[str] = []
    rank1: list[str] = []
    unused: set[str] = set()
    prods: dict[str, Production] = {}
    leaves = params.leaf_labels or params.labels

    def pick(pool: list[str]) -> str:
        fresh = [x for x in pool if x in unused]
        name = rng.choice(fresh) if fresh and rng.random() < 0.6 else rng.choice(pool)
        unused.discard(name)
        return name

    n = params.nonterminals
    for i in range(n):
        name = f"N{i}"
        last = i == n - 1
        kinds = [1, 3] if not last else [1]
        if rank1 and rank0:
            kinds.append(2)
        if rank1 and not last:
            kinds.append(4)
        kind = rng.choices(kinds, [params.weights[k - 1] for k in kinds])[0]
        if kind in (1, 3):
            k = rng.randint(0, params.max_arity) if rank0 else 0
            if last and rank0:
                k = rng.randint(1, max(1, params.max_arity))
            args = tuple(pick(rank0) for _ in range(k))
            label = rng.choice(leaves if k == 0 and kind == 1 else params.labels)
            if kind == 1:
                prods[name] = Branch(label, args)
            else:
                cut = rng.randint(0, k)
                prods[name] = Hole(label, args[:cut], args[cut:])
        elif kind == 2:
            prods[name] = Apply(pick(rank1), pick(rank0))
        else:
            prods[name] = Compose(pick(rank1), pick(rank1))
        (rank0 if prods[name].rank == 0 else rank1).append(name)
        unused.add(name)
    return NormalGrammar(prods, f"N{n - 1}")
