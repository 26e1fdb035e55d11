"""Explicit ordered trees, the term syntax, orders on trees, and reference oracles.

Everything here works on fully decompressed trees.  The compressed algorithms in
the other modules are checked against these functions.
"""

from __future__ import annotations

import re
from collections import Counter, defaultdict
from enum import IntEnum
from functools import cmp_to_key
from itertools import permutations
from typing import Callable, Hashable, Iterator, Sequence

__all__ = [
    "Tree",
    "Order",
    "LabelOrder",
    "DEFAULT_ORDER",
    "TermSyntaxError",
    "TreeError",
    "SUBDIVISION",
    "parse_term",
    "unparse",
    "format_label",
    "rank_label",
    "split_rank",
    "dflr",
    "ranked_tree",
    "unranked_tree",
    "llex_compare_trees",
    "ahu_canon",
    "naive_even",
    "naive_center",
    "naive_rooty",
    "naive_reroot",
    "naive_bcanon",
    "naive_bisim",
    "bisim_classes",
    "brute_force_iso",
    "naive_iso_unrooted",
    "tree_height",
    "tree_diameter",
    "subtree_at",
]

SUBDIVISION = "#"
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_PLAIN_LABEL = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(?:#[0-9]+)?\Z")
_RANKED = re.compile(r"(.+)#([0-9]+)\Z", re.S)


class TermSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class TreeError(ValueError):
    pass


class Order(IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


def _sign(x: int) -> Order:
    return Order.LESS if x < 0 else Order.GREATER if x > 0 else Order.EQUAL


class Tree:
    """An ordered, node-labelled rooted tree.  Immutable."""

    __slots__ = ("label", "children", "_sig", "_hash", "_size")

    def __init__(self, label: str, children: Sequence["Tree"] = ()) -> None:
        self.label = label
        self.children = tuple(children)
        self._sig: tuple | None = None
        self._hash: int | None = None
        self._size: int | None = None

    def preorder(self) -> Iterator["Tree"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def signature(self) -> tuple:
        # preorder (label, arity) pairs determine the tree uniquely
        if self._sig is None:
            self._sig = tuple((n.label, len(n.children)) for n in self.preorder())
        return self._sig

    @property
    def size(self) -> int:
        if self._size is None:
            self._size = sum(1 for _ in self.preorder())
        return self._size

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Tree):
            return NotImplemented
        return self.signature() == other.signature()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.signature())
        return self._hash

    def __repr__(self) -> str:
        return f"Tree({unparse(self)!r})"

    def __str__(self) -> str:
        return unparse(self)


# ---------------------------------------------------------------- syntax

_TOKEN = re.compile(r"\s+|[A-Za-z_][A-Za-z0-9_]*(?:#[0-9]+)?|'[^']*'|[(),]|.", re.S)


def _tokens(text: str, line0: int = 1) -> Iterator[tuple[str, str, int, int]]:
    line, col_base = line0, 0
    for m in _TOKEN.finditer(text):
        tok = m.group()
        col = m.start() - col_base + 1
        if tok[0].isspace():
            nl = tok.count("\n")
            if nl:
                line += nl
                col_base = m.start() + tok.rfind("\n") + 1
            continue
        if tok in "(),":
            yield tok, tok, line, col
        elif tok[0] == "'":
            if len(tok) < 2 or not tok.endswith("'"):
                raise TermSyntaxError("unterminated quoted symbol", line, col)
            if tok == "''":
                raise TermSyntaxError("empty quoted symbol", line, col)
            yield "Q", tok[1:-1], line, col
        elif _IDENT.match(tok):
            yield "I", tok, line, col
        else:
            raise TermSyntaxError(f"unexpected character {tok!r}", line, col)


def parse_terms(
    text: str,
    build: Callable[[str, bool, list, tuple[int, int]], object],
    line0: int = 1,
):
    """Parse one term, calling build(symbol, quoted, children, (line, col)) bottom-up."""
    stack: list[tuple[tuple, list]] = []
    result: list = []
    pending: tuple | None = None
    state = "sym"
    where = (line0, 1)
    seen_any = False

    def emit(node: object) -> None:
        if stack:
            stack[-1][1].append(node)
        else:
            result.append(node)

    for kind, val, line, col in _tokens(text, line0):
        seen_any = True
        where = (line, col)
        if result:
            raise TermSyntaxError(f"unexpected {val!r} after end of term", line, col)
        if state == "sym":
            if kind not in ("I", "Q"):
                raise TermSyntaxError(f"expected a symbol, found {val!r}", line, col)
            pending = (val, kind == "Q", (line, col))
            state = "after_sym"
            continue
        if state == "after_sym":
            assert pending is not None
            if kind == "(":
                stack.append((pending, []))
                pending = None
                state = "sym"
                continue
            emit(build(pending[0], pending[1], [], pending[2]))
            pending = None
            if result:
                raise TermSyntaxError(f"unexpected {val!r} after end of term", line, col)
        # state: a node has just been completed
        if kind == ",":
            if not stack:
                raise TermSyntaxError("',' outside of an argument list", line, col)
            state = "sym"
        elif kind == ")":
            if not stack:
                raise TermSyntaxError("unbalanced ')'", line, col)
            (sym, quoted, pos), kids = stack.pop()
            emit(build(sym, quoted, kids, pos))
            state = "node"
        else:
            raise TermSyntaxError(f"unexpected {val!r}", line, col)
    if state == "after_sym" and not stack:
        assert pending is not None
        emit(build(pending[0], pending[1], [], pending[2]))
    if not result:
        if not seen_any:
            raise TermSyntaxError("empty input", *where)
        raise TermSyntaxError("unexpected end of input", *where)
    return result[0]


def parse_term(text: str) -> Tree:
    """Parse the term syntax, e.g. ``f(a, b(c))`` or ``'#'(x)``."""
    return parse_terms(text, lambda sym, quoted, kids, pos: Tree(sym, kids))


def format_label(label: str, reserved: Callable[[str], bool] | None = None) -> str:
    if not label or "'" in label:
        raise TreeError(f"label {label!r} cannot be written in term syntax")
    if _PLAIN_LABEL.match(label) and not (reserved and reserved(label)):
        return label
    return f"'{label}'"


def unparse(t: Tree) -> str:
    """Canonical text of a tree (no whitespace)."""
    out: list[str] = []
    stack: list[object] = [t]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        out.append(format_label(item.label))
        if item.children:
            stack.append(")")
            kids = item.children
            for i in range(len(kids) - 1, -1, -1):
                stack.append(kids[i])
                if i:
                    stack.append(",")
            stack.append("(")
    return "".join(out)


# ------------------------------------------------------------ ranks, orders

def rank_label(label: str, k: int) -> str:
    return f"{label}#{k}"


def split_rank(label: str) -> tuple[str, int | None]:
    m = _RANKED.match(label)
    if m:
        return m.group(1), int(m.group(2))
    return label, None


def check_rankable(label: str) -> None:
    if "#" in label and label != SUBDIVISION:
        raise TreeError(f"label {label!r} contains the reserved character '#'")


def _post(t: Tree) -> list[Tree]:
    out: list[Tree] = []
    stack = [(t, False)]
    while stack:
        node, done = stack.pop()
        if done:
            out.append(node)
        else:
            stack.append((node, True))
            for c in reversed(node.children):
                stack.append((c, False))
    return out


def _rebuild(t: Tree, fn: Callable[[Tree, list[Tree]], Tree]) -> Tree:
    """Bottom-up rebuild: fn(original_node, new_children) -> new node."""
    done: dict[int, Tree] = {}
    for node in _post(t):
        done[id(node)] = fn(node, [done[id(c)] for c in node.children])
    return done[id(t)]


def ranked_tree(t: Tree) -> Tree:
    def step(node: Tree, kids: list[Tree]) -> Tree:
        check_rankable(node.label)
        return Tree(rank_label(node.label, len(kids)), kids)

    return _rebuild(t, step)


def unranked_tree(t: Tree) -> Tree:
    return _rebuild(t, lambda node, kids: Tree(split_rank(node.label)[0], kids))


def default_label_key(label: str) -> tuple[bytes, int]:
    base, rank = split_rank(label)
    return base.encode("utf-8"), -1 if rank is None else rank


class LabelOrder:
    """Total order on labels given by a sort key."""

    def __init__(self, key: Callable[[str], Hashable] | None = None) -> None:
        self.key = key or default_label_key

    def compare(self, a: str, b: str) -> Order:
        if a == b:
            return Order.EQUAL
        ka, kb = self.key(a), self.key(b)
        if ka == kb:
            # distinct labels must never tie
            ka, kb = (ka, a), (kb, b)
        return Order.LESS if ka < kb else Order.GREATER


DEFAULT_ORDER = LabelOrder()


def dflr(t: Tree) -> tuple[str, ...]:
    return tuple(n.label for n in t.preorder())


def _compare_signatures(s: tuple, t: tuple, order: LabelOrder) -> Order:
    if len(s) != len(t):
        return _sign(len(s) - len(t))
    for (la, ka), (lb, kb) in zip(s, t):
        if la != lb:
            return order.compare(la, lb)
        if ka != kb:
            return _sign(ka - kb)
    return Order.EQUAL


def llex_compare_trees(s: Tree, t: Tree, order: LabelOrder = DEFAULT_ORDER) -> Order:
    """Length-lexicographic comparison of the dflr traversals.

    Arity breaks ties between equal traversals, which only matters for unranked
    inputs; for ranked trees the result is exactly the dflr comparison.
    """
    return _compare_signatures(s.signature(), t.signature(), order)


def _sort_trees(trees: list[Tree], order: LabelOrder) -> list[Tree]:
    def cmp(a: Tree, b: Tree) -> int:
        if a.size != b.size:
            return a.size - b.size
        return int(_compare_signatures(a.signature(), b.signature(), order))

    return sorted(trees, key=cmp_to_key(cmp))


def ahu_canon(t: Tree, order: LabelOrder = DEFAULT_ORDER) -> Tree:
    """The llex-least ordering of t (children sorted bottom-up)."""

    def step(node: Tree, kids: list[Tree]) -> Tree:
        if len(kids) > 1:
            kids = _sort_trees(kids, order)
        new = Tree(node.label, kids)
        new._size = 1 + sum(k.size for k in kids)
        return new

    return _rebuild(t, step)


def tree_height(t: Tree) -> int:
    h: dict[int, int] = {}
    for node in _post(t):
        h[id(node)] = 1 + max((h[id(c)] for c in node.children), default=-1)
    return h[id(t)]


def subtree_at(t: Tree, address: Sequence[int]) -> Tree:
    node = t
    for step in address:
        if not 1 <= step <= len(node.children):
            raise TreeError(f"address {tuple(address)} is not a node of the tree")
        node = node.children[step - 1]
    return node


def naive_even(t: Tree) -> Tree:
    return _rebuild(t, lambda node, kids: Tree(node.label, [Tree(SUBDIVISION, [k]) for k in kids]))


# ------------------------------------------------------- unrooted oracles

def _adjacency(t: Tree) -> tuple[list[list[int]], list[int], list[int]]:
    """Undirected adjacency of t; also parent index and child position per node."""
    adj: list[list[int]] = [[]]
    parent = [-1]
    pos = [0]
    stack = [(t, 0)]
    while stack:
        node, idx = stack.pop()
        for i, c in enumerate(node.children, 1):
            j = len(adj)
            adj.append([idx])
            adj[idx].append(j)
            parent.append(idx)
            pos.append(i)
            stack.append((c, j))
    return adj, parent, pos


def _address(parent: list[int], pos: list[int], v: int) -> tuple[int, ...]:
    out = []
    while parent[v] >= 0:
        out.append(pos[v])
        v = parent[v]
    return tuple(reversed(out))


def tree_diameter(t: Tree) -> int:
    adj, _, _ = _adjacency(t)
    far, _ = _bfs_far(adj, 0)
    _, d = _bfs_far(adj, far)
    return d


def _bfs_far(adj: list[list[int]], src: int) -> tuple[int, int]:
    dist = {src: 0}
    frontier = [src]
    last = src
    while frontier:
        nxt = []
        for v in frontier:
            for w in adj[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    nxt.append(w)
        if nxt:
            last = nxt[0]
        frontier = nxt
    return last, dist[last]


def naive_center(t: Tree) -> tuple[int, ...]:
    """Address of the unique center, by repeatedly deleting all leaves."""
    adj, parent, pos = _adjacency(t)
    n = len(adj)
    degree = [len(a) for a in adj]
    alive = n
    layer = [v for v in range(n) if degree[v] <= 1]
    removed = [False] * n
    while alive > 2:
        nxt = []
        for v in layer:
            removed[v] = True
            alive -= 1
            for w in adj[v]:
                if not removed[w]:
                    degree[w] -= 1
                    if degree[w] == 1:
                        nxt.append(w)
        layer = nxt
    survivors = [v for v in range(n) if not removed[v]]
    if len(survivors) != 1:
        raise TreeError("the tree has two centers (odd diameter); subdivide first")
    return _address(parent, pos, survivors[0])


def naive_rooty(c: Tree, hole: str = "y") -> Tree:
    """Reverse the path from the root to the unique hole leaf of context c."""
    path: list[tuple[Tree, int]] = []
    node = c
    while node.label != hole or node.children:
        idx = [i for i, k in enumerate(node.children) if _contains_leaf(k, hole)]
        if len(idx) != 1:
            raise TreeError("context must contain exactly one hole")
        path.append((node, idx[0]))
        node = node.children[idx[0]]
    out = Tree(hole)
    for node, i in path:
        out = Tree(node.label, node.children[:i] + (out,) + node.children[i + 1:])
    return out


def _contains_leaf(t: Tree, label: str) -> bool:
    return any(n.label == label and not n.children for n in t.preorder())


def naive_reroot(t: Tree, u: Sequence[int]) -> Tree:
    """The same unrooted tree, rooted at address u (the old parent becomes the last child)."""
    chain = [t]
    for step in u:
        node = chain[-1]
        if not 1 <= step <= len(node.children):
            raise TreeError(f"address {tuple(u)} is not a node of the tree")
        chain.append(node.children[step - 1])
    up: Tree | None = None
    for depth in range(len(u)):
        node, i = chain[depth], u[depth] - 1
        kids = node.children[:i] + node.children[i + 1:]
        up = Tree(node.label, kids + ((up,) if up is not None else ()))
    target = chain[-1]
    return Tree(target.label, target.children + ((up,) if up is not None else ()))


def naive_iso_unrooted(s: Tree, t: Tree) -> bool:
    """Unrooted unordered isomorphism by trying every root of t."""
    if s.size != t.size:
        return False
    key = _class_ids([s])[0]
    adj, parent, pos = _adjacency(t)
    rooted = [naive_reroot(t, _address(parent, pos, v)) for v in range(len(adj))]
    interned: dict = {}
    ids = _class_ids([s] + rooted, interned)
    return key is not None and ids[0] in ids[1:]


# ------------------------------------------------ unordered iso and bisim

def _class_ids(trees: Sequence[Tree], interned: dict | None = None, dedup: bool = False) -> list[int]:
    """AHU class numbers: equal ids iff unordered-isomorphic (or bisimilar when dedup)."""
    table: dict = {} if interned is None else interned
    out = []
    for t in trees:
        ids: dict[int, int] = {}
        for node in _post(t):
            kids = [ids[id(c)] for c in node.children]
            key = (node.label, tuple(sorted(set(kids) if dedup else kids)))
            ids[id(node)] = table.setdefault(key, len(table))
        out.append(ids[id(t)])
    return out


def brute_force_iso(s: Tree, t: Tree) -> bool:
    """Unordered isomorphism by trying child permutations.  Small trees only."""
    if s.label != t.label or len(s.children) != len(t.children) or s.size != t.size:
        return False
    if not s.children:
        return True
    for perm in permutations(t.children):
        if all(brute_force_iso(a, b) for a, b in zip(s.children, perm)):
            return True
    return False


def naive_bcanon(t: Tree, order: LabelOrder = DEFAULT_ORDER) -> Tree:
    """Remove bisimulation-duplicate children bottom-up; siblings sorted by llex."""
    table: dict = {}
    cls: dict[int, int] = {}

    def step(node: Tree, kids: list[Tree]) -> Tree:
        seen: dict[int, Tree] = {}
        for k in kids:
            seen.setdefault(cls[id(k)], k)
        uniq = _sort_trees(list(seen.values()), order) if len(seen) > 1 else list(seen.values())
        new = Tree(node.label, uniq)
        new._size = 1 + sum(k.size for k in uniq)
        key = (node.label, tuple(sorted(seen)))
        cls[id(new)] = table.setdefault(key, len(table))
        return new

    return _rebuild(t, step)


def bisim_classes(trees: Sequence[Tree]) -> list[int]:
    """Block of each root under the largest bisimulation on the disjoint union.

    Rank-stratified partition refinement: nodes are refined in order of their
    height (their rank in the well-founded successor relation); once a stratum
    is split by the blocks of its successors it is stable.
    """
    labels: list[str] = []
    succ: list[list[int]] = []
    roots = []
    for t in trees:
        base = len(labels)
        roots.append(base)
        stack = [(t, base)]
        labels.append(t.label)
        succ.append([])
        while stack:
            node, idx = stack.pop()
            for c in node.children:
                j = len(labels)
                labels.append(c.label)
                succ.append([])
                succ[idx].append(j)
                stack.append((c, j))
    n = len(labels)
    height = [0] * n
    for v in range(n - 1, -1, -1):  # children always have larger indices
        if succ[v]:
            height[v] = 1 + max(height[w] for w in succ[v])
    strata: dict[int, list[int]] = defaultdict(list)
    for v in range(n):
        strata[height[v]].append(v)
    block = [-1] * n
    nblocks = 0
    for h in sorted(strata):
        # initial partition of the stratum: by label; refine by successor blocks
        split: dict = {}
        for v in strata[h]:
            sig = (labels[v], frozenset(block[w] for w in succ[v]))
            if sig not in split:
                split[sig] = nblocks
                nblocks += 1
            block[v] = split[sig]
    return [block[r] for r in roots]


def naive_bisim(s: Tree, t: Tree) -> bool:
    a, b = bisim_classes([s, t])
    return a == b


def label_multiset(t: Tree) -> Counter:
    return Counter(n.label for n in t.preorder())
