"""Canonization of normal-form grammars and rooted unordered isomorphism.

The engine processes rank-0 nonterminals bottom-up.  When a nonterminal Z is
reached, every other rank-0 value below it is already canonical, and after its
phase Z's value is canonical too.  Finished values are merged when equal, so
equality of finished nonterminals is equality of names.

A type-2 production Z -> B(A) is handled through the *spine* of B: the sequence
of type-3 nonterminals B1 ... BN with B(y) = B1(B2(...BN(y))), kept as an SLP
whose terminals are nonterminal names.  The suffix trees t_k = Bk...BN(A) are
compared against the sorted finished values S_1 < ... < S_m; this splits the
spine into blocks, and inside block i every type-3 right-hand side is reordered
so that exactly the arguments <= S_i precede the parameter.

The same engine computes bisimulation canons (``bisim=True``): duplicate
arguments are dropped, and along a spine an argument of B_{k-1} equal to the
suffix tree t_k is dropped as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import Iterable

from ._util import NameSupply, postorder
from .grammar import Grammar, ranked_grammar
from .normal import (
    Apply,
    Branch,
    Compose,
    Hole,
    NormalGrammar,
    Production,
    normalize,
    ranked_normal,
)
from .slp import (
    DEFAULT_POLICY,
    DflrSlps,
    EqualityPolicy,
    Slp,
    SlpStore,
    slp_compare_llex,
    slp_equal,
    value_key,
)
from .terms import DEFAULT_ORDER, LabelOrder, rank_label, split_rank

__all__ = [
    "canonize",
    "canonize_with_slp",
    "iso_rooted",
    "dedup_equal",
    "prepare",
    "BlockSplit",
]


@dataclass
class BlockSplit:
    """Record of one type-2 phase: breakpoints k_1 >= ... >= k_m against S_1 < ... < S_m."""

    nonterminal: str
    spine_length: int
    references: list[str]
    breakpoints: list[int]
    blocks: list[tuple[int, int, int]] = field(default_factory=list)  # (i, first, last)


class _Engine:
    def __init__(
        self,
        g: NormalGrammar,
        order: LabelOrder,
        policy: EqualityPolicy,
        bisim: bool = False,
        trace: bool = False,
    ) -> None:
        self.order = order
        self.policy = policy
        self.bisim = bisim
        self.trace: list[BlockSplit] | None = [] if trace else None
        self.start = g.start
        self.source_order = list(g.order)
        self.prods: dict[str, Production] = {}
        self.names = NameSupply(set(g.prods) | g.terminals())
        self.d = DflrSlps(store=SlpStore())
        self.spine_store = SlpStore()
        self.spine: dict[str, int] = {}
        self.cons: dict[Production, str] = {}
        self.alias: dict[str, str] = {}
        self.fixed: dict[str, str] = {}
        self.final_sorted: list[str] = []
        self.buckets: dict[tuple, list[str]] = {}
        self._cmp: dict[tuple[str, str], int] = {}
        self._pre_img: dict[int, int] = {}
        self._suf_img: dict[int, int] = {}
        self._weight: dict[int, int] = {}
        for n in g.order:
            self._set(n, g.prods[n])
            if g.prods[n].rank == 1:
                self.cons.setdefault(g.prods[n], n)

    # -------------------------------------------------------- bookkeeping

    def _set(self, name: str, prod: Production) -> None:
        self.prods[name] = prod
        self.d.define(name, prod)
        if isinstance(prod, Hole):
            self.spine[name] = self.spine_store.terminal(name)
        elif isinstance(prod, Compose):
            self.spine[name] = self.spine_store.add((self.spine[prod.outer], self.spine[prod.inner]))

    def _cons(self, prod: Production) -> str:
        name = self.cons.get(prod)
        if name is None:
            name = self.names.fresh()
            self._set(name, prod)
            self.cons[prod] = name
            self.fixed[name] = name
        elif name not in self.fixed:
            self._set(name, prod)
            self.fixed[name] = name
        return name

    def _new_rank0(self, prod: Production) -> str:
        name = self.names.fresh()
        self._set(name, prod)
        return name

    def resolve(self, name: str) -> str:
        while name in self.alias:
            name = self.alias[name]
        return name

    def size(self, name: str) -> int:
        return self.d.store.lengths[self.d.tree[name]]

    def compare(self, a: str, b: str) -> int:
        if a == b:
            return 0
        key = (a, b)
        hit = self._cmp.get(key)
        if hit is None:
            hit = int(slp_compare_llex(self.d.slp(a), self.d.slp(b), self.order, self.policy))
            self._cmp[key] = hit
            self._cmp[(b, a)] = -hit
        return hit

    def _sorted_args(self, args: Iterable[str]) -> list[str]:
        return sorted(args, key=cmp_to_key(self.compare))

    def _finalize(self, z: str) -> None:
        """Merge z with an equal finished value, or record it as a new one."""
        slp = self.d.slp(z)
        key = value_key(slp, self.policy)
        bucket = self.buckets.setdefault(key, [])
        for w in bucket:
            if slp_equal(slp, self.d.slp(w), self.policy):
                self.alias[z] = w
                return
        bucket.append(z)
        lo, hi = 0, len(self.final_sorted)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.compare(self.final_sorted[mid], z) < 0:
                lo = mid + 1
            else:
                hi = mid
        self.final_sorted.insert(lo, z)

    # ------------------------------------------------------------- fixing

    def _dedup(self, label: str, left: tuple[str, ...], right: tuple[str, ...]):
        seen: set[str] = set()
        new_left, new_right = [], []
        for a in left:
            if a not in seen:
                seen.add(a)
                new_left.append(a)
        for a in right:
            if a not in seen:
                seen.add(a)
                new_right.append(a)
        return new_left, new_right

    def _relabel(self, label: str, arity: int, new_arity: int) -> str:
        if arity == new_arity:
            return label
        base, rank = split_rank(label)
        return rank_label(base, new_arity) if rank is not None else label

    def fix_ctx(self, name: str) -> str:
        """Equivalent rank-1 nonterminal whose arguments are finished names."""
        if name in self.fixed:
            return self.fixed[name]

        def kids(n: str) -> list[str]:
            p = self.prods[n]
            if isinstance(p, Compose) and n not in self.fixed:
                return [c for c in (p.outer, p.inner) if c not in self.fixed]
            return []

        for n in postorder([name], kids):
            if n in self.fixed:
                continue
            p = self.prods[n]
            if isinstance(p, Hole):
                left = tuple(self.resolve(a) for a in p.left)
                right = tuple(self.resolve(a) for a in p.right)
                label = p.label
                if self.bisim:
                    nl, nr = self._dedup(label, left, right)
                    label = self._relabel(label, len(left) + len(right) + 1, len(nl) + len(nr) + 1)
                    left, right = tuple(nl), tuple(nr)
                new: Production = Hole(label, left, right)
            else:
                assert isinstance(p, Compose)
                new = Compose(self.fixed[p.outer], self.fixed[p.inner])
            if new == p:
                # children may have changed value (bisim drops), so rebuild
                self._set(n, p)
                self.fixed[n] = n
            else:
                self.fixed[n] = self._cons(new)
        return self.fixed[name]

    def fix_rank0(self, z: str) -> None:
        p = self.prods[z]
        if isinstance(p, Branch):
            args = tuple(self.resolve(a) for a in p.args)
            label = p.label
            if self.bisim:
                uniq = list(dict.fromkeys(args))
                label = self._relabel(label, len(args), len(uniq))
                args = tuple(uniq)
            new: Production = Branch(label, args)
        else:
            assert isinstance(p, Apply)
            new = Apply(self.fix_ctx(p.ctx), self.resolve(p.arg))
        self._set(z, new)

    # -------------------------------------------------------------- spine

    def _image(self, x: int, pre: bool) -> int:
        memo = self._pre_img if pre else self._suf_img
        hit = memo.get(x)
        if hit is not None:
            return hit
        sp = self.spine_store
        table = self.d.pre if pre else self.d.suf
        for y in postorder([x], lambda r: [i for i in sp.rules[r] if not isinstance(i, str) and i not in memo]):
            if y in memo:
                continue
            parts = [table[i] if isinstance(i, str) else memo[i] for i in sp.rules[y]]
            memo[y] = self.d.store.add(parts if pre else reversed(parts))
        return memo[x]

    def _weight_of(self, item) -> int:
        if isinstance(item, str):
            st = self.d.store
            return st.lengths[self.d.pre[item]] + st.lengths[self.d.suf[item]]
        hit = self._weight.get(item)
        if hit is not None:
            return hit
        sp = self.spine_store
        for y in postorder([item], lambda r: [i for i in sp.rules[r] if not isinstance(i, str) and i not in self._weight]):
            if y not in self._weight:
                self._weight[y] = sum(self._weight_of(i) for i in sp.rules[y])
        return self._weight[item]

    def _wprefix(self, x: int, j: int) -> int:
        """Total weight of the first j spine symbols of rule x."""
        sp = self.spine_store
        acc = 0
        cur = x
        while j > 0:
            if isinstance(cur, str):
                return acc + self._weight_of(cur)
            if j >= sp.lengths[cur]:
                return acc + self._weight_of(cur)
            for item in sp.rules[cur]:
                n = sp.item_length(item)
                if j >= n:
                    acc += self._weight_of(item)
                    j -= n
                else:
                    cur = item
                    break
        return acc

    def _find_weight(self, x: int, target: int) -> int | None:
        """The j with weight(first j symbols of x) == target, if any."""
        sp = self.spine_store
        j = 0
        cur = x
        while True:
            if target == 0:
                return j
            w = self._weight_of(cur)
            if target == w:
                return j + sp.item_length(cur)
            if target > w or isinstance(cur, str):
                return None
            for item in sp.rules[cur]:
                w = self._weight_of(item)
                if target < w:
                    cur = item
                    break
                target -= w
                j += sp.item_length(item)
            else:
                return None

    def _copy(self, rule: int, rank: dict[str, int] | None, threshold: int, memo: dict) -> str:
        """Rank-1 nonterminal for a spine rule, type-3 arguments reordered for a block."""
        sp = self.spine_store

        def leaf(c: str) -> str:
            if rank is None:
                return c
            p = self.prods[c]
            assert isinstance(p, Hole)
            args = self._sorted_args(p.left + p.right)
            nu = sum(1 for a in args if rank[a] <= threshold)
            new = Hole(p.label, tuple(args[:nu]), tuple(args[nu:]))
            return c if new == p else self._cons(new)

        if rule in memo:
            return memo[rule]
        for y in postorder([rule], lambda r: [i for i in sp.rules[r] if not isinstance(i, str) and i not in memo]):
            if y in memo:
                continue
            names = [leaf(i) if isinstance(i, str) else memo[i] for i in sp.rules[y]]
            acc = names[-1]
            for n in reversed(names[:-1]):
                acc = self._cons(Compose(n, acc))
            memo[y] = acc
        return memo[rule]

    # ------------------------------------------------------------- phases

    def _reachable_final(self, z: str) -> set[str]:
        out: set[str] = set()
        seen: set[str] = set()
        stack = list(self.prods[z].children)
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            p = self.prods[n]
            if p.rank == 0:
                out.add(n)
            stack.extend(p.children)
        return out

    def canon_phase(self, z: str) -> None:
        p = self.prods[z]
        if isinstance(p, Branch):
            self._set(z, Branch(p.label, tuple(self._sorted_args(p.args))))
        else:
            assert isinstance(p, Apply)
            self._set(z, self._canon_apply(z, p))
        self._finalize(z)

    def _canon_apply(self, z: str, p: Apply) -> Production:
        reach = self._reachable_final(z)
        refs = [s for s in self.final_sorted if s in reach]
        rank = {s: i for i, s in enumerate(self.final_sorted)}
        sp = self.spine[p.ctx]
        n = self.spine_store.lengths[sp]
        a = p.arg
        total = self._weight_of(sp) + self.size(a)

        def size_t(k: int) -> int:
            return self.size(a) if k > n else total - self._wprefix(sp, k - 1)

        def chain(ks: list[int], lo: int) -> str | None:
            # canonical spine for positions lo..N given breakpoints ks
            bounds = [n + 1] + ks + [lo]
            out = None
            for i in range(len(bounds) - 2, -1, -1):
                first, last = bounds[i + 1], bounds[i] - 1
                if first > last:
                    continue
                seg = self.spine_store.slice(sp, first, last)
                threshold = rank[refs[i - 1]] if i > 0 else -1
                piece = self._copy(seg, rank, threshold, {})
                out = piece if out is None else self._cons(Compose(out, piece))
            return out

        # k_i = max k with t_k >= S_i, nonincreasing in i.  Sizes strictly
        # drop along the spine, so only the position whose size equals
        # |S_i| needs a real comparison, and its canonical form depends
        # only on the breakpoints already found.
        ks: list[int] = []
        hi = n + 1
        for s in refs:
            ss = self.size(s)
            lo, top = 1, hi  # size_t(1) exceeds every reference
            while lo < top:
                mid = (lo + top + 1) // 2
                if size_t(mid) >= ss:
                    lo = mid
                else:
                    top = mid - 1
            k = lo
            if size_t(k) == ss:
                if k > n:
                    ge = self.compare(a, s) >= 0
                else:
                    ctx = chain(ks, k)
                    assert ctx is not None
                    x = self.spine[ctx]
                    rule = self.d.store.add((self._image(x, True), self.d.tree[a], self._image(x, False)))
                    ge = slp_compare_llex(Slp(self.d.store, rule), self.d.slp(s), self.order, self.policy) >= 0
                if not ge:
                    k -= 1
            ks.append(k)
            hi = k
        m = len(refs)
        split = BlockSplit(z, n, refs, ks) if self.trace is not None else None
        if split is not None:
            bounds = [n + 1] + ks + [1]
            for i in range(m, -1, -1):
                if bounds[i + 1] <= bounds[i] - 1:
                    split.blocks.append((i, bounds[i + 1], bounds[i] - 1))
            self.trace.append(split)  # type: ignore[union-attr]
        acc = chain(ks, 1)
        assert acc is not None, "a spine is never empty"
        return Apply(acc, a)

    def _spine_symbols(self, sp: int) -> set[str]:
        rules = self.spine_store.rules
        out: set[str] = set()
        for r in postorder([sp], lambda x: [i for i in rules[x] if not isinstance(i, str)]):
            out.update(i for i in rules[r] if isinstance(i, str))
        return out

    def _segment(self, sp: int, first: int, last: int) -> str:
        seg = self.spine_store.slice(sp, first, last)
        return self._copy(seg, None, 0, {})

    def _bisim_apply(self, z: str, p: Apply) -> str | None:
        """Drop spine arguments equal to the suffix tree below them.

        Returns the new production's context (or None when the whole spine
        vanished and z equals its argument) after rewriting prods[z].
        """
        sp = self.spine[p.ctx]
        n = self.spine_store.lengths[sp]
        holes = self._spine_symbols(sp)
        sizes = sorted({self.size(a) for c in holes for a in self.prods[c].children})
        t = p.arg
        c = n + 1  # symbols 1..c-1 of the spine remain above t
        while c > 1:
            nc = self.size(t)
            wc = self._wprefix(sp, c - 1)
            found = None
            for size in sizes:
                if size < nc:
                    continue
                j = self._find_weight(sp, wc + nc - size)
                if j is None or j < 1:
                    continue
                k = j + 1
                hole = self.spine_store.symbol_at(sp, k - 1)
                hp = self.prods[hole]
                assert isinstance(hp, Hole)
                cands = [x for x in hp.children if self.size(x) == size]
                if not cands:
                    continue
                if k == c:
                    tk = t
                else:
                    tk = self._new_rank0(Apply(self._segment(sp, k, c - 1), t))
                    self.canon_phase(tk)
                    tk = self.resolve(tk)
                if tk in cands:
                    found = (k, hole, hp, tk)
                    break
            if found is None:
                break
            k, hole, hp, tk = found
            left = tuple(x for x in hp.left if x != tk)
            right = tuple(x for x in hp.right if x != tk)
            arity = len(hp.left) + len(hp.right) + 1
            label = self._relabel(hp.label, arity, arity - 1)
            new_hole = self._cons(Hole(label, left, right))
            t = self._new_rank0(Apply(new_hole, tk))
            self.canon_phase(t)
            t = self.resolve(t)
            c = k - 1
        if c == n + 1:
            return p.ctx
        if c == 1:
            self.alias[z] = t
            return None
        self._set(z, Apply(self._segment(sp, 1, c - 1), t))
        return self.prods[z].ctx  # type: ignore[union-attr]

    def run(self) -> tuple[NormalGrammar, Slp]:
        for z in self.source_order:
            if self.prods[z].rank != 0:
                continue
            self.fix_rank0(z)
            p = self.prods[z]
            if self.bisim and isinstance(p, Apply):
                if self._bisim_apply(z, p) is None:
                    continue
            self.canon_phase(z)
        return self._output()

    def _output(self) -> tuple[NormalGrammar, Slp]:
        root = self.resolve(self.start)
        out: dict[str, Production] = {}
        for n in postorder([root], lambda x: self.prods[x].children):
            p = self.prods[n]
            if isinstance(p, Branch):
                p = Branch(p.label, tuple(self.resolve(a) for a in p.args))
            elif isinstance(p, Apply):
                p = Apply(p.ctx, self.resolve(p.arg))
            elif isinstance(p, Hole):
                p = Hole(p.label, tuple(self.resolve(a) for a in p.left), tuple(self.resolve(a) for a in p.right))
            out[n] = p
        if root != self.start:
            out[self.start] = out[root]
        for n, p in list(out.items()):
            for c in p.children:
                if c not in out:
                    raise AssertionError(f"dangling reference {c} in {n}")
        g = NormalGrammar(out, self.start)
        return g, self.d.slp(root)


def canonize(
    g: NormalGrammar,
    order: LabelOrder = DEFAULT_ORDER,
    policy: EqualityPolicy = DEFAULT_POLICY,
) -> NormalGrammar:
    """A grammar for the canon (llex-least ordering) of val(g).  g must be ranked."""
    return _Engine(g, order, policy).run()[0]


def canonize_with_slp(
    g: NormalGrammar,
    order: LabelOrder = DEFAULT_ORDER,
    policy: EqualityPolicy = DEFAULT_POLICY,
    trace: list | None = None,
) -> tuple[NormalGrammar, Slp]:
    eng = _Engine(g, order, policy, trace=trace is not None)
    out = eng.run()
    if trace is not None:
        trace.extend(eng.trace or [])
    return out


def dedup_equal(g: NormalGrammar, policy: EqualityPolicy = DEFAULT_POLICY) -> NormalGrammar:
    """Merge rank-0 nonterminals with equal values."""
    d = DflrSlps(g)
    alias: dict[str, str] = {}
    buckets: dict[tuple, list[str]] = {}
    for n in g.order:
        if g.prods[n].rank != 0:
            continue
        s = d.slp(n)
        bucket = buckets.setdefault(value_key(s, policy), [])
        for w in bucket:
            if slp_equal(s, d.slp(w), policy):
                alias[n] = w
                break
        else:
            bucket.append(n)
    if not alias:
        return g

    def r(x: str) -> str:
        return alias.get(x, x)

    out: dict[str, Production] = {}
    for n, p in g.prods.items():
        if isinstance(p, Branch):
            p = Branch(p.label, tuple(r(a) for a in p.args))
        elif isinstance(p, Apply):
            p = Apply(p.ctx, r(p.arg))
        elif isinstance(p, Hole):
            p = Hole(p.label, tuple(r(a) for a in p.left), tuple(r(a) for a in p.right))
        out[n] = p
    if g.start in alias:
        out[g.start] = out[alias[g.start]]
    return NormalGrammar(out, g.start)


def prepare(g: Grammar | NormalGrammar, policy: EqualityPolicy = DEFAULT_POLICY, ranked: bool = False) -> NormalGrammar:
    """Rank, normalize and deduplicate an input grammar."""
    if isinstance(g, NormalGrammar):
        ng = g if ranked else ranked_normal(g)
    else:
        ng = normalize(g if ranked else ranked_grammar(g))
    return dedup_equal(ng, policy)


def iso_rooted(
    g1: Grammar | NormalGrammar,
    g2: Grammar | NormalGrammar,
    order: LabelOrder = DEFAULT_ORDER,
    policy: EqualityPolicy = DEFAULT_POLICY,
    ranked: bool = False,
) -> bool:
    """Are the unordered versions of val(g1) and val(g2) isomorphic?"""
    a = prepare(g1, policy, ranked)
    b = prepare(g2, policy, ranked)
    _, sa = canonize_with_slp(a, order, policy)
    _, sb = canonize_with_slp(b, order, policy)
    return slp_equal(sa, sb, policy)
