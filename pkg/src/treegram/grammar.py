"""Straight-line tree grammars (linear or not): data model, file format, evaluation."""

from __future__ import annotations

import re
from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter
from typing import Callable, Iterator, Mapping, Sequence, TypeVar

from ._util import NameSupply
from .terms import (
    SUBDIVISION,
    TermSyntaxError,
    Tree,
    check_rankable,
    format_label,
    parse_terms,
    rank_label,
)

__all__ = [
    "Sym",
    "Rule",
    "Grammar",
    "GrammarError",
    "EvalTooLarge",
    "parse_grammar",
    "format_grammar",
    "eval_grammar",
    "size_of",
    "height_of",
    "ranked_grammar",
    "even_grammar",
    "tree_to_dag",
    "tree_to_grammar",
]

V = TypeVar("V")

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_PARAM = re.compile(r"y[0-9]*\Z")

TERMINAL, NONTERMINAL, PARAM = "t", "n", "p"


class GrammarError(ValueError):
    pass


class EvalTooLarge(GrammarError):
    def __init__(self, size: int, limit: int) -> None:
        super().__init__(f"value has {size} nodes, more than the limit of {limit}")
        self.size = size
        self.limit = limit


class Sym:
    """A node of a right-hand side: terminal, nonterminal call, or parameter."""

    __slots__ = ("kind", "name", "kids")

    def __init__(self, kind: str, name: str, kids: Sequence["Sym"] = ()) -> None:
        self.kind = kind
        self.name = name
        self.kids = tuple(kids)

    def __repr__(self) -> str:
        return f"Sym({self.kind}, {self.name!r}, {len(self.kids)} kids)"


def term(label: str, *kids: Sym) -> Sym:
    return Sym(TERMINAL, label, kids)


def call(name: str, *kids: Sym) -> Sym:
    return Sym(NONTERMINAL, name, kids)


def param(name: str = "y") -> Sym:
    return Sym(PARAM, name)


def sym_postorder(root: Sym) -> list[Sym]:
    out: list[Sym] = []
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            out.append(node)
        else:
            stack.append((node, True))
            for k in reversed(node.kids):
                stack.append((k, False))
    return out


def sym_map(root: Sym, fn: Callable[[Sym, list[Sym]], Sym]) -> Sym:
    done: dict[int, Sym] = {}
    for node in sym_postorder(root):
        done[id(node)] = fn(node, [done[id(k)] for k in node.kids])
    return done[id(root)]


@dataclass(frozen=True)
class Rule:
    params: tuple[str, ...]
    rhs: Sym


class Grammar:
    """A validated straight-line tree grammar.

    Nonterminals unreachable from the start symbol are dropped on construction.
    """

    def __init__(self, rules: Mapping[str, Rule], start: str, prune: bool = True) -> None:
        if start not in rules:
            raise GrammarError(f"start symbol {start!r} has no production")
        if rules[start].params:
            raise GrammarError(f"start symbol {start!r} must have rank 0")
        deps: dict[str, set[str]] = {}
        for name, rule in rules.items():
            if not _NAME.match(name) or _PARAM.match(name):
                raise GrammarError(f"invalid nonterminal name {name!r}")
            if len(set(rule.params)) != len(rule.params):
                raise GrammarError(f"{name}: repeated parameter")
            deps[name] = set()
            for node in sym_postorder(rule.rhs):
                if node.kind == PARAM:
                    if node.name not in rule.params:
                        raise GrammarError(f"{name}: undeclared parameter {node.name!r}")
                    if node.kids:
                        raise GrammarError(f"{name}: parameter {node.name!r} with children")
                elif node.kind == NONTERMINAL:
                    if node.name not in rules:
                        raise GrammarError(f"{name}: unknown nonterminal {node.name!r}")
                    want = len(rules[node.name].params)
                    if len(node.kids) != want:
                        raise GrammarError(
                            f"{name}: {node.name} has rank {want} but is given {len(node.kids)} arguments"
                        )
                    deps[name].add(node.name)
        try:
            order = list(TopologicalSorter(deps).static_order())
        except CycleError as exc:
            raise GrammarError(f"cyclic nonterminals: {' -> '.join(exc.args[1])}") from None
        reach = {start}
        for name in reversed(order):
            if name in reach:
                reach |= deps[name]
        if prune:
            order = [n for n in order if n in reach]
        elif len(reach) != len(rules):
            raise GrammarError("useless productions: " + ", ".join(sorted(set(rules) - reach)))
        self.rules: dict[str, Rule] = {n: rules[n] for n in order}
        self.start = start
        self.order: list[str] = order  # callees before callers
        self.linear = all(_is_linear(self.rules[n]) for n in order)
        self.deps = {n: deps[n] for n in order}

    def rank(self, name: str) -> int:
        return len(self.rules[name].params)

    @property
    def size(self) -> int:
        return sum(len(sym_postorder(r.rhs)) for r in self.rules.values())

    def terminals(self) -> set[str]:
        out: set[str] = set()
        for r in self.rules.values():
            out.update(n.name for n in sym_postorder(r.rhs) if n.kind == TERMINAL)
        return out

    def __repr__(self) -> str:
        kind = "linear" if self.linear else "non-linear"
        return f"<Grammar {kind}, {len(self.rules)} nonterminals, start {self.start}>"


def _is_linear(rule: Rule) -> bool:
    seen: set[str] = set()
    for node in sym_postorder(rule.rhs):
        if node.kind == PARAM:
            if node.name in seen:
                return False
            seen.add(node.name)
    return True


# ------------------------------------------------------------ file format

_LHS = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\(([^)]*)\))?\s*=(.*)\Z", re.S)


def parse_grammar(text: str) -> Grammar:
    """Read the line-oriented grammar format (header ``slt v1`` or ``st v1``)."""
    lines = text.splitlines()
    header = None
    start = None
    raw: list[tuple[int, str, tuple[str, ...], str, int]] = []
    for no, line in enumerate(lines, 1):
        stripped = line.strip()
        if not stripped or line.lstrip().startswith("#"):
            continue
        if header is None:
            if stripped not in ("slt v1", "st v1"):
                raise GrammarError(f"line {no}: expected header 'slt v1' or 'st v1'")
            header = stripped.split()[0]
            continue
        if re.match(r"start(\s|\Z)", stripped) and "=" not in stripped:
            parts = stripped.split()
            if len(parts) != 2 or not _NAME.match(parts[1]):
                raise GrammarError(f"line {no}: malformed start declaration")
            if start is not None:
                raise GrammarError(f"line {no}: start declared twice")
            start = parts[1]
            continue
        m = _LHS.match(line)
        if not m:
            raise GrammarError(f"line {no}: expected '<Name> = <term>'")
        name, plist, body = m.group(1), m.group(2), m.group(3)
        params: tuple[str, ...] = ()
        if plist is not None:
            params = tuple(p.strip() for p in plist.split(","))
            for p in params:
                if not _PARAM.match(p):
                    raise GrammarError(f"line {no}: parameter {p!r} must be named y or y<digits>")
        if _PARAM.match(name):
            raise GrammarError(f"line {no}: {name!r} is reserved for parameters")
        raw.append((no, name, params, body, m.start(3) + 1))
    if header is None:
        raise GrammarError("empty grammar file")
    if not raw:
        raise GrammarError("grammar has no productions")
    names: dict[str, int] = {}
    for no, name, _, _, _ in raw:
        if name in names:
            raise GrammarError(f"line {no}: duplicate production for {name} (first on line {names[name]})")
        names[name] = no
    rules: dict[str, Rule] = {}
    for no, name, params, body, col in raw:

        def build(sym: str, quoted: bool, kids: list, pos, _params=params, _no=no) -> Sym:
            if quoted:
                return Sym(TERMINAL, sym, kids)
            if sym in _params:
                if kids:
                    raise GrammarError(f"line {_no}: parameter {sym} cannot have children")
                return Sym(PARAM, sym)
            if sym in names:
                return Sym(NONTERMINAL, sym, kids)
            if _PARAM.match(sym):
                raise GrammarError(f"line {_no}: undeclared parameter {sym}")
            return Sym(TERMINAL, sym, kids)

        try:
            rhs = parse_terms(body, build)
        except TermSyntaxError as exc:
            raise GrammarError(f"line {no}: {exc}") from None
        rules[name] = Rule(params, rhs)
    g = Grammar(rules, start if start is not None else raw[0][1])
    if header == "slt" and not g.linear:
        raise GrammarError("'slt' grammar has a production that copies a parameter; use 'st v1'")
    return g


def format_rhs(rhs: Sym, nonterminals: Mapping[str, object]) -> str:
    def reserved(label: str) -> bool:
        return label in nonterminals or bool(_PARAM.match(label))

    out: list[str] = []
    stack: list[object] = [rhs]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        assert isinstance(item, Sym)
        out.append(format_label(item.name, reserved) if item.kind == TERMINAL else item.name)
        if item.kids:
            stack.append(")")
            for i in range(len(item.kids) - 1, -1, -1):
                stack.append(item.kids[i])
                if i:
                    stack.append(", ")
            stack.append("(")
    return "".join(out)


def format_grammar(g: Grammar) -> str:
    lines = ["slt v1" if g.linear else "st v1", f"start {g.start}"]
    for name in reversed(g.order):
        rule = g.rules[name]
        lhs = f"{name}({', '.join(rule.params)})" if rule.params else name
        lines.append(f"{lhs} = {format_rhs(rule.rhs, g.rules)}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- evaluation

def size_table(g: Grammar) -> dict[str, tuple[int, tuple[int, ...]]]:
    """Per nonterminal, the affine size function c + sum m_i * |arg_i|."""
    table: dict[str, tuple[int, tuple[int, ...]]] = {}
    for name in g.order:
        rule = g.rules[name]
        k = len(rule.params)
        index = {p: i for i, p in enumerate(rule.params)}
        val: dict[int, tuple[int, list[int]]] = {}
        for node in sym_postorder(rule.rhs):
            if node.kind == PARAM:
                m = [0] * k
                m[index[node.name]] = 1
                val[id(node)] = (0, m)
            elif node.kind == TERMINAL:
                c, m = 1, [0] * k
                for kid in node.kids:
                    kc, km = val[id(kid)]
                    c += kc
                    m = [a + b for a, b in zip(m, km)]
                val[id(node)] = (c, m)
            else:
                fc, fm = table[node.name]
                c, m = fc, [0] * k
                for coeff, kid in zip(fm, node.kids):
                    kc, km = val[id(kid)]
                    c += coeff * kc
                    m = [a + coeff * b for a, b in zip(m, km)]
                val[id(node)] = (c, m)
        c, m = val[id(rule.rhs)]
        table[name] = (c, tuple(m))
    return table


def size_of(g: Grammar, name: str | None = None) -> int:
    """Exact node count of val(name); parameters count as one node each."""
    c, m = size_table(g)[g.start if name is None else name]
    return c + sum(m)


def _mx(*xs: int | None) -> int | None:
    vals = [x for x in xs if x is not None]
    return max(vals) if vals else None


def _add(a: int | None, b: int | None) -> int | None:
    return None if a is None or b is None else a + b


def height_table(g: Grammar) -> dict[str, tuple[int | None, tuple[int | None, ...]]]:
    """Per nonterminal, height as max(c, max_i d_i + h(arg_i)); None means absent."""
    table: dict[str, tuple[int | None, tuple[int | None, ...]]] = {}
    for name in g.order:
        rule = g.rules[name]
        k = len(rule.params)
        index = {p: i for i, p in enumerate(rule.params)}
        val: dict[int, tuple[int | None, list[int | None]]] = {}
        for node in sym_postorder(rule.rhs):
            if node.kind == PARAM:
                d: list[int | None] = [None] * k
                d[index[node.name]] = 0
                val[id(node)] = (None, d)
            elif node.kind == TERMINAL:
                c: int | None = 0
                d = [None] * k
                for kid in node.kids:
                    kc, kd = val[id(kid)]
                    c = _mx(c, _add(kc, 1))
                    d = [_mx(a, _add(b, 1)) for a, b in zip(d, kd)]
                val[id(node)] = (c, d)
            else:
                fc, fd = table[node.name]
                c, d = fc, [None] * k
                for depth, kid in zip(fd, node.kids):
                    kc, kd = val[id(kid)]
                    c = _mx(c, _add(depth, kc))
                    d = [_mx(a, _add(depth, b)) for a, b in zip(d, kd)]
                val[id(node)] = (c, d)
        c, d = val[id(rule.rhs)]
        table[name] = (c, tuple(d))
    return table


def height_of(g: Grammar, name: str | None = None) -> int:
    """Exact height (edges on a longest root-leaf path) of val(name); parameters count as leaves."""
    c, d = height_table(g)[g.start if name is None else name]
    h = _mx(c, *d)
    assert h is not None
    return h


class _Frame:
    __slots__ = ("name", "code", "pc", "stack", "args")

    def __init__(self, name: str, code: list[Sym], args: tuple) -> None:
        self.name = name
        self.code = code
        self.pc = 0
        self.stack: list = []
        self.args = args


def interpret(
    g: Grammar,
    make: Callable[[str, list[V]], V],
    memo_calls: bool = False,
    on_call: Callable[[str, tuple], None] | None = None,
) -> V:
    """Evaluate the start symbol with an explicit call stack.

    make(label, children) builds one value node.  Calls to rank-0 nonterminals are
    always memoized; with memo_calls every call is memoized on its argument tuple,
    which needs hashable values.
    """
    code = {n: sym_postorder(r.rhs) for n, r in g.rules.items()}
    pidx = {n: {p: i for i, p in enumerate(r.params)} for n, r in g.rules.items()}
    memo: dict[tuple, V] = {}
    frames = [_Frame(g.start, code[g.start], ())]
    while True:
        f = frames[-1]
        if f.pc == len(f.code):
            frames.pop()
            (result,) = f.stack
            if memo_calls or not f.args:
                memo[(f.name, f.args)] = result
            if not frames:
                return result
            frames[-1].stack.append(result)
            continue
        node = f.code[f.pc]
        f.pc += 1
        k = len(node.kids)
        if node.kind == PARAM:
            f.stack.append(f.args[pidx[f.name][node.name]])
        elif node.kind == TERMINAL:
            kids = f.stack[len(f.stack) - k:] if k else []
            if k:
                del f.stack[len(f.stack) - k:]
            f.stack.append(make(node.name, kids))
        else:
            args = tuple(f.stack[len(f.stack) - k:]) if k else ()
            if k:
                del f.stack[len(f.stack) - k:]
            key = (node.name, args)
            if (memo_calls or not args) and key in memo:
                f.stack.append(memo[key])
                continue
            if on_call is not None:
                on_call(node.name, args)
            frames.append(_Frame(node.name, code[node.name], args))


def eval_grammar(g: Grammar, max_nodes: int = 10**7) -> Tree:
    """Decompress val(g); refuses when the exact size exceeds max_nodes."""
    size = size_of(g)
    if size > max_nodes:
        raise EvalTooLarge(size, max_nodes)
    return interpret(g, lambda label, kids: Tree(label, kids))


# --------------------------------------------------------- transformations

def map_terminals(g: Grammar, fn: Callable[[Sym, list[Sym]], Sym]) -> Grammar:
    def step(node: Sym, kids: list[Sym]) -> Sym:
        if node.kind == TERMINAL:
            return fn(node, kids)
        return Sym(node.kind, node.name, kids)

    rules = {n: Rule(r.params, sym_map(r.rhs, step)) for n, r in g.rules.items()}
    return Grammar(rules, g.start)


def ranked_grammar(g: Grammar) -> Grammar:
    """Mangle each terminal with its child count; nonterminals are left alone."""

    def step(node: Sym, kids: list[Sym]) -> Sym:
        check_rankable(node.name)
        return Sym(TERMINAL, rank_label(node.name, len(kids)), kids)

    return map_terminals(g, step)


def even_grammar(g: Grammar) -> Grammar:
    """Subdivide every edge of the derived tree with a '#' node."""
    return map_terminals(
        g, lambda node, kids: Sym(TERMINAL, node.name, [Sym(TERMINAL, SUBDIVISION, [k]) for k in kids])
    )


def tree_to_dag(t: Tree, start: str = "S") -> Grammar:
    """Hash-consed dag of t: one rank-0 nonterminal per distinct subtree."""
    labels = {n.label for n in t.preorder()}
    names = NameSupply(labels | {start})
    table: dict[tuple, str] = {}
    rules: dict[str, Rule] = {}
    ids: dict[int, str] = {}
    post: list[Tree] = []
    stack = [(t, False)]
    while stack:
        node, done = stack.pop()
        if done:
            post.append(node)
        elif id(node) not in ids:
            stack.append((node, True))
            stack.extend((c, False) for c in reversed(node.children))
    for node in post:
        if id(node) in ids:
            continue
        key = (node.label, tuple(ids[id(c)] for c in node.children))
        name = table.get(key)
        if name is None:
            name = start if node is t else names.fresh()
            table[key] = name
            rules[name] = Rule((), Sym(TERMINAL, node.label, [Sym(NONTERMINAL, k) for k in key[1]]))
        ids[id(node)] = name
    root = ids[id(t)]
    if root != start:
        rules[start] = rules[root]
    return Grammar(rules, start)


def tree_to_grammar(t: Tree, start: str = "S") -> Grammar:
    """A one-production grammar whose right-hand side is t itself."""

    def step(node: Tree, kids: list[Sym]) -> Sym:
        return Sym(TERMINAL, node.label, kids)

    done: dict[int, Sym] = {}
    stack = [(t, False)]
    while stack:
        node, flag = stack.pop()
        if flag:
            done[id(node)] = step(node, [done[id(c)] for c in node.children])
        else:
            stack.append((node, True))
            stack.extend((c, False) for c in reversed(node.children))
    return Grammar({start: Rule((), done[id(t)])}, start)


def iter_rules(g: Grammar) -> Iterator[tuple[str, Rule]]:
    for name in g.order:
        yield name, g.rules[name]
