"""Non-linear (copying) tree grammars: dag expansion, decisions, and the QBF gadgets."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from ._util import NameSupply
from .bisim import bisim_equal
from .canonize import iso_rooted
from .grammar import NONTERMINAL, PARAM, TERMINAL, Grammar, GrammarError, Rule, Sym, interpret
from .slp import DEFAULT_POLICY, EqualityPolicy
from .terms import DEFAULT_ORDER, LabelOrder

__all__ = [
    "ExpansionBudget",
    "BudgetExceeded",
    "st_to_dag",
    "copy_family",
    "iso_st",
    "bisim_st",
    "QbfFormula",
    "QbfSyntaxError",
    "Lit",
    "And",
    "Or",
    "qbf_parse",
    "qbf_format",
    "qbf_eval",
    "qbf_to_st",
]


# -------------------------------------------------------------- dag expansion

@dataclass(frozen=True)
class ExpansionBudget:
    max_nodes: int = 10**6
    max_instantiations: int = 10**5

    def __post_init__(self) -> None:
        if self.max_nodes < 1 or self.max_instantiations < 1:
            raise ValueError("budget limits must be positive")


class BudgetExceeded(GrammarError):
    def __init__(self, what: str, count: int, limit: int) -> None:
        super().__init__(f"expansion budget exceeded: {count} {what} (limit {limit})")
        self.count = count
        self.limit = limit


def st_to_dag(g: Grammar, budget: ExpansionBudget = ExpansionBudget()) -> Grammar:
    """Equivalent dag (rank-0 grammar) with one nonterminal per distinct subtree.

    Each call is memoized on its tuple of argument nodes, so copies of a
    parameter end up as one shared node.
    """
    table: dict[tuple, int] = {}
    nodes: list[tuple[str, tuple[int, ...]]] = []
    calls: dict[str, int] = {}

    def make(label: str, kids: list[int]) -> int:
        key = (label, tuple(kids))
        hit = table.get(key)
        if hit is None:
            if len(nodes) >= budget.max_nodes:
                raise BudgetExceeded("dag nodes", len(nodes) + 1, budget.max_nodes)
            hit = table[key] = len(nodes)
            nodes.append(key)
        return hit

    def on_call(name: str, args: tuple) -> None:
        n = calls.get(name, 0) + 1
        if n > budget.max_instantiations:
            raise BudgetExceeded(f"instantiations of {name}", n, budget.max_instantiations)
        calls[name] = n

    root = interpret(g, make, memo_calls=True, on_call=on_call)
    labels = {label for label, _ in nodes}
    names = NameSupply(labels | {g.start})
    ids = [g.start if i == root else names.fresh() for i in range(len(nodes))]
    rules = {
        ids[i]: Rule((), Sym(TERMINAL, label, [Sym(NONTERMINAL, ids[k]) for k in kids]))
        for i, (label, kids) in enumerate(nodes)
    }
    return Grammar(rules, g.start)


def copy_family(n: int) -> Grammar:
    """S -> A0(a), A_i(y) -> A_{i+1}(A_{i+1}(y)), A_n(y) -> f(y, y).

    The value is the full binary tree of height 2^n.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    y = Sym(PARAM, "y")
    rules = {"S": Rule((), Sym(NONTERMINAL, "A0", [Sym(TERMINAL, "a")]))}
    for i in range(n):
        nxt = f"A{i + 1}"
        rules[f"A{i}"] = Rule(("y",), Sym(NONTERMINAL, nxt, [Sym(NONTERMINAL, nxt, [y])]))
    rules[f"A{n}"] = Rule(("y",), Sym(TERMINAL, "f", [y, y]))
    return Grammar(rules, "S")


def iso_st(
    g1: Grammar,
    g2: Grammar,
    budget: ExpansionBudget = ExpansionBudget(),
    order: LabelOrder = DEFAULT_ORDER,
    policy: EqualityPolicy = DEFAULT_POLICY,
) -> bool:
    return iso_rooted(st_to_dag(g1, budget), st_to_dag(g2, budget), order, policy)


def bisim_st(
    g1: Grammar,
    g2: Grammar,
    budget: ExpansionBudget = ExpansionBudget(),
    order: LabelOrder = DEFAULT_ORDER,
    policy: EqualityPolicy = DEFAULT_POLICY,
) -> bool:
    return bisim_equal(st_to_dag(g1, budget), st_to_dag(g2, budget), order, policy)


# ------------------------------------------------------------------- QBF

@dataclass(frozen=True)
class Lit:
    var: str
    positive: bool = True


@dataclass(frozen=True)
class And:
    left: "Matrix"
    right: "Matrix"


@dataclass(frozen=True)
class Or:
    left: "Matrix"
    right: "Matrix"


Matrix = Union[Lit, And, Or]


@dataclass(frozen=True)
class QbfFormula:
    """Q1 z1 ... Qn zn : matrix, with the matrix in negation normal form."""

    prefix: tuple[tuple[str, str], ...]  # ("A" | "E", variable)
    matrix: Matrix


class QbfSyntaxError(ValueError):
    pass


_QTOKEN = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_]*)|([.&|!()]))")


def _qtokens(text: str) -> list[str]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _QTOKEN.match(text, pos)
        if not m:
            raise QbfSyntaxError(f"unexpected character {text[pos:].lstrip()[:1]!r} at offset {pos}")
        out.append(m.group(1) or m.group(2))
        pos = m.end()
    return out


def _is_ident(tok: str) -> bool:
    return bool(re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok))


def qbf_parse(text: str) -> QbfFormula:
    """Parse ``A z. E w. (z | !w) & (w | !z)``; '!' binds tightest, then '&', then '|'."""
    toks = _qtokens(text)
    prefix: list[tuple[str, str]] = []
    i = 0
    while i + 2 < len(toks) and toks[i] in ("A", "E") and _is_ident(toks[i + 1]) and toks[i + 2] == ".":
        if any(v == toks[i + 1] for _, v in prefix):
            raise QbfSyntaxError(f"variable {toks[i + 1]} is quantified twice")
        prefix.append((toks[i], toks[i + 1]))
        i += 3
    body = toks[i:]
    if not body:
        raise QbfSyntaxError("missing matrix")
    # shunting-yard into postfix, then build the tree with a stack
    prec = {"|": 1, "&": 2, "!": 3}
    out: list[str] = []
    ops: list[str] = []
    expect_operand = True
    for tok in body:
        if expect_operand:
            if tok == "!":
                ops.append(tok)
            elif tok == "(":
                ops.append(tok)
            elif _is_ident(tok):
                out.append(tok)
                expect_operand = False
            else:
                raise QbfSyntaxError(f"expected a variable, '!' or '(' but found {tok!r}")
        else:
            if tok in ("&", "|"):
                while ops and ops[-1] != "(" and prec[ops[-1]] >= prec[tok]:
                    out.append(ops.pop())
                ops.append(tok)
                expect_operand = True
            elif tok == ")":
                while ops and ops[-1] != "(":
                    out.append(ops.pop())
                if not ops:
                    raise QbfSyntaxError("unbalanced ')'")
                ops.pop()
            else:
                raise QbfSyntaxError(f"expected '&', '|' or ')' but found {tok!r}")
    if expect_operand:
        raise QbfSyntaxError("formula ends early")
    while ops:
        op = ops.pop()
        if op == "(":
            raise QbfSyntaxError("unbalanced '('")
        out.append(op)
    bound = {v for _, v in prefix}
    stack: list[tuple] = []
    for tok in out:
        if tok == "!":
            stack.append(("not", stack.pop()))
        elif tok in ("&", "|"):
            r = stack.pop()
            stack.append((tok, stack.pop(), r))
        else:
            if tok not in bound:
                raise QbfSyntaxError(f"free variable {tok}")
            stack.append(("var", tok))
    (ast,) = stack
    return QbfFormula(tuple(prefix), _nnf(ast))


def _nnf(ast: tuple) -> Matrix:
    # push negations to the variables (De Morgan), iteratively
    todo: list[tuple[tuple, bool, bool]] = [(ast, True, False)]
    done: list[Matrix] = []
    while todo:
        node, pos, built = todo.pop()
        kind = node[0]
        if kind == "not":
            todo.append((node[1], not pos, False))
        elif kind == "var":
            done.append(Lit(node[1], pos))
        elif built:
            r = done.pop()
            l = done.pop()
            conj = (kind == "&") == pos
            done.append(And(l, r) if conj else Or(l, r))
        else:
            todo.append((node, pos, True))
            todo.append((node[2], pos, False))
            todo.append((node[1], pos, False))
    (m,) = done
    return m


def _postorder(m: Matrix) -> list[Matrix]:
    out: list[Matrix] = []
    stack: list[tuple[Matrix, bool]] = [(m, False)]
    while stack:
        node, ready = stack.pop()
        if isinstance(node, Lit) or ready:
            out.append(node)
        else:
            stack.append((node, True))
            stack.append((node.right, False))
            stack.append((node.left, False))
    return out


def qbf_format(f: QbfFormula) -> str:
    parts: dict[int, str] = {}
    for node in _postorder(f.matrix):
        if isinstance(node, Lit):
            parts[id(node)] = node.var if node.positive else f"!{node.var}"
        else:
            op = " & " if isinstance(node, And) else " | "
            parts[id(node)] = f"({parts[id(node.left)]}{op}{parts[id(node.right)]})"
    quant = "".join(f"{q} {v}. " for q, v in f.prefix)
    return quant + parts[id(f.matrix)]


def qbf_eval(f: QbfFormula, max_vars: int = 24) -> bool:
    """Truth value by trying all assignments along the prefix."""
    if len(f.prefix) > max_vars:
        raise ValueError(f"{len(f.prefix)} variables; brute force is capped at {max_vars}")
    post = _postorder(f.matrix)

    def matrix(env: dict[str, bool]) -> bool:
        val: dict[int, bool] = {}
        for node in post:
            if isinstance(node, Lit):
                val[id(node)] = env[node.var] == node.positive
            elif isinstance(node, And):
                val[id(node)] = val[id(node.left)] and val[id(node.right)]
            else:
                val[id(node)] = val[id(node.left)] or val[id(node.right)]
        return val[id(f.matrix)]

    def go(i: int, env: dict[str, bool]) -> bool:
        if i == len(f.prefix):
            return matrix(env)
        q, v = f.prefix[i]
        vals = (go(i + 1, {**env, v: c}) for c in (False, True))
        return all(vals) if q == "A" else any(vals)

    return go(0, {})


def qbf_to_st(f: QbfFormula) -> tuple[Grammar, Grammar]:
    """Grammars G1, G2 whose values are unordered-isomorphic iff f is true.

    Literal gadgets: A_z(z) -> f(z,1), B_z(z) -> f(1,1), A_!z(z) -> f(z,0),
    B_!z(z) -> f(0,0).  The and/or/forall/exists gadgets are the usual
    a/b-labelled pairings.
    """
    order = [v for _, v in f.prefix]
    pname = {v: f"y{i}" for i, v in enumerate(order, 1)}
    rules: dict[str, Rule] = {}
    counter = [0]

    def T(label: str, *kids: Sym) -> Sym:
        return Sym(TERMINAL, label, list(kids))

    def fresh() -> tuple[str, str]:
        counter[0] += 1
        return f"A{counter[0]}", f"B{counter[0]}"

    # matrix subformulas: params are their free variables in prefix order
    free: dict[int, list[str]] = {}
    names: dict[int, tuple[str, str]] = {}
    for node in _postorder(f.matrix):
        if isinstance(node, Lit):
            fv = [node.var]
        else:
            s = set(free[id(node.left)]) | set(free[id(node.right)])
            fv = [v for v in order if v in s]
        free[id(node)] = fv
        a, b = fresh()
        names[id(node)] = (a, b)
        params = tuple(pname[v] for v in fv)

        def args(child: Matrix) -> list[Sym]:
            return [Sym(PARAM, pname[v]) for v in free[id(child)]]

        if isinstance(node, Lit):
            z = Sym(PARAM, pname[node.var])
            c = "1" if node.positive else "0"
            rules[a] = Rule(params, T("f", z, T(c)))
            rules[b] = Rule(params, T("f", T(c), T(c)))
        else:
            (a1, b1), (a2, b2) = names[id(node.left)], names[id(node.right)]
            x, y = args(node.left), args(node.right)
            rules[a], rules[b] = _gadget(isinstance(node, And), a1, b1, x, a2, b2, y)
    # quantifiers, innermost first; psi_i has parameters z_1..z_{i-1}
    inner_a, inner_b = names[id(f.matrix)]
    inner_free = free[id(f.matrix)]
    for i in range(len(order), 0, -1):
        q, v = f.prefix[i - 1]
        params = tuple(pname[w] for w in order[: i - 1])

        def inst(c: str, fv=inner_free, v=v) -> list[Sym]:
            return [T(c) if w == v else Sym(PARAM, pname[w]) for w in fv]

        a, b = fresh()
        rules[a], rules[b] = _gadget(q == "A", inner_a, inner_b, inst("0"), inner_a, inner_b, inst("1"))
        for name in (a, b):
            rules[name] = Rule(params, rules[name].rhs)
        inner_a, inner_b = a, b
        inner_free = order[: i - 1]
    if inner_free:
        raise GrammarError("formula has free variables")
    return Grammar(rules, inner_a), Grammar(rules, inner_b)


def _gadget(
    conj: bool, a1: str, b1: str, x: list[Sym], a2: str, b2: str, y: list[Sym]
) -> tuple[Rule, Rule]:
    """and/forall pair when conj, else or/exists pair; rules take the free params of x and y."""

    def T(label: str, *kids: Sym) -> Sym:
        return Sym(TERMINAL, label, list(kids))

    def N(name: str, args: list[Sym]) -> Sym:
        return Sym(NONTERMINAL, name, [_copy(s) for s in args])

    params: list[str] = []
    for s in x + y:
        if s.kind == PARAM and s.name not in params:
            params.append(s.name)
    params.sort(key=lambda p: int(p[1:]))
    if conj:
        ra = T("f", T("a", N(a1, x)), T("b", N(a2, y)))
        rb = T("f", T("a", N(b1, x)), T("b", N(b2, y)))
    else:
        ra = T("f", T("f", T("a", N(a1, x)), T("b", N(b2, y))), T("f", T("a", N(b1, x)), T("b", N(a2, y))))
        rb = T("f", T("f", T("a", N(a1, x)), T("b", N(a2, y))), T("f", T("a", N(b1, x)), T("b", N(b2, y))))
    return Rule(tuple(params), ra), Rule(tuple(params), rb)


def _copy(s: Sym) -> Sym:
    return Sym(s.kind, s.name, [_copy(k) for k in s.kids])
