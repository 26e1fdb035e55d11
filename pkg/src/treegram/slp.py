"""Straight-line programs over labels: lengths, slicing, equality, llex comparison.

Rules live in an :class:`SlpStore`; an item of a rule is either a rule id (int)
or a terminal label (str).  An :class:`Slp` is a handle (store, root).
"""

from __future__ import annotations

import hashlib
import random
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache
from itertools import chain
from typing import Iterable, Iterator, Mapping, Sequence, Union

import gmpy2

from .normal import Apply, Branch, Compose, Hole, NormalGrammar, Production
from .terms import DEFAULT_ORDER, LabelOrder, Order

__all__ = [
    "SlpStore",
    "Slp",
    "SlpError",
    "EqualityPolicy",
    "DEFAULT_POLICY",
    "DflrSlps",
    "build_dflr",
    "slp_length",
    "slp_slice",
    "slp_equal",
    "slp_symbol_at",
    "slp_compare_llex",
    "slp_from_rules",
    "slp_from_string",
    "compare_values",
    "value_key",
    "dump_slp",
]

Item = Union[int, str]


class SlpError(ValueError):
    pass


_FLAT = 512
_FLAT_CACHE = 4_000_000


class SlpStore:
    """Append-only rule table shared by many SLP handles."""

    def __init__(self) -> None:
        self.rules: list[tuple[Item, ...]] = []
        self.lengths: list[int] = []
        self._cum: dict[int, list[int]] = {}
        self._single: dict[str, int] = {}
        self._pre: dict[tuple[int, int], int] = {}
        self._suf: dict[tuple[int, int], int] = {}
        self._fp: dict[tuple[int, int], list] = {}
        self._flat: dict[int, tuple[str, ...]] = {}
        self._flat_size = 0
        self.empty = self.add(())

    def __len__(self) -> int:
        return len(self.rules)

    def item_length(self, item: Item) -> int:
        return 1 if isinstance(item, str) else self.lengths[item]

    def add(self, items: Iterable[Item]) -> int:
        """Add a rule; empty sub-rules are dropped and a lone sub-rule is reused."""
        lengths = self.lengths
        kept = tuple(x for x in items if isinstance(x, str) or lengths[x])
        if len(kept) == 1 and not isinstance(kept[0], str):
            return kept[0]
        if not kept and self.rules:
            return self.empty
        self.rules.append(kept)
        lengths.append(sum(1 if isinstance(x, str) else lengths[x] for x in kept))
        return len(self.rules) - 1

    def terminal(self, label: str) -> int:
        rid = self._single.get(label)
        if rid is None:
            rid = self._single[label] = self.add((label,))
        return rid

    def cumulative(self, x: int) -> list[int]:
        """cum[i] = total length of the items before item i."""
        cum = self._cum.get(x)
        if cum is None:
            cum, total = [], 0
            for item in self.rules[x]:
                cum.append(total)
                total += 1 if isinstance(item, str) else self.lengths[item]
            self._cum[x] = cum
        return cum

    def _locate(self, x: int, pos: int) -> tuple[int, int]:
        """Index of the item of rule x that covers 1-based position pos, and its offset."""
        cum = self.cumulative(x)
        i = bisect_right(cum, pos - 1) - 1
        return i, cum[i]

    def prefix(self, x: int, r: int) -> int:
        """Rule for the first r symbols of x."""
        if r <= 0:
            return self.empty
        if r >= self.lengths[x]:
            return x
        key = (x, r)
        hit = self._pre.get(key)
        if hit is not None:
            return hit
        levels: list[tuple[Item, ...]] = []
        cur: Item = x
        while not isinstance(cur, str) and r < self.lengths[cur]:
            i, off = self._locate(cur, r)
            levels.append(self.rules[cur][:i])
            r -= off
            cur = self.rules[cur][i]
        top: Item = cur
        for before in reversed(levels):
            top = self.add(before + (top,))
        if isinstance(top, str):
            top = self.terminal(top)
        self._pre[key] = top
        return top

    def suffix(self, x: int, l: int) -> int:
        """Rule for the symbols of x from 1-based position l to the end."""
        if l <= 1:
            return x
        if l > self.lengths[x]:
            return self.empty
        key = (x, l)
        hit = self._suf.get(key)
        if hit is not None:
            return hit
        levels: list[tuple[Item, ...]] = []
        cur: Item = x
        while l > 1:
            assert not isinstance(cur, str)
            i, off = self._locate(cur, l)
            levels.append(self.rules[cur][i + 1:])
            l -= off
            cur = self.rules[cur][i]
        top: Item = cur
        for after in reversed(levels):
            top = self.add((top,) + after)
        if isinstance(top, str):
            top = self.terminal(top)
        self._suf[key] = top
        return top

    def slice(self, x: int, l: int, r: int) -> int:
        if l > r:
            return self.empty
        while True:
            if l == 1 and r == self.lengths[x]:
                return x
            i, off_i = self._locate(x, l)
            j, off_j = self._locate(x, r)
            items = self.rules[x]
            if i == j:
                item = items[i]
                if isinstance(item, str):
                    return self.terminal(item)
                x, l, r = item, l - off_i, r - off_i
                continue
            left = self.suffix(items[i], l - off_i) if not isinstance(items[i], str) else items[i]
            right = self.prefix(items[j], r - off_j) if not isinstance(items[j], str) else items[j]
            return self.add((left,) + items[i + 1:j] + (right,))

    def symbol_at(self, x: int, pos: int) -> str:
        item: Item = x
        while not isinstance(item, str):
            i, off = self._locate(item, pos)
            pos -= off
            item = self.rules[item][i]
        return item

    def flat(self, x: int) -> tuple[str, ...]:
        """The expansion of a short rule as a tuple (cached)."""
        hit = self._flat.get(x)
        if hit is not None:
            return hit
        if self.lengths[x] > _FLAT:
            raise SlpError("flat() is only for short rules")
        if self._flat_size > _FLAT_CACHE:
            self._flat.clear()
            self._flat_size = 0
        rules, memo = self.rules, self._flat
        stack = [x]
        while stack:
            y = stack[-1]
            todo = [i for i in rules[y] if not isinstance(i, str) and i not in memo]
            if todo:
                stack.extend(todo)
                continue
            stack.pop()
            if y in memo:
                continue
            out: list[str] = []
            for i in rules[y]:
                if isinstance(i, str):
                    out.append(i)
                else:
                    out.extend(memo[i])
            memo[y] = tuple(out)
            self._flat_size += len(out)
        return memo[x]

    def chunks(self, x: int) -> Iterator[tuple[str, ...]]:
        """The expansion of x as a stream of tuples."""
        lengths = self.lengths
        if lengths[x] <= _FLAT:
            yield self.flat(x)
            return
        stack: list[tuple[tuple[Item, ...], int]] = [(self.rules[x], 0)]
        run: list[str] = []
        while stack:
            items, i = stack[-1]
            if i == len(items):
                stack.pop()
                continue
            stack[-1] = (items, i + 1)
            item = items[i]
            if isinstance(item, str):
                run.append(item)
                continue
            if run:
                yield tuple(run)
                run = []
            if lengths[item] <= _FLAT:
                yield self.flat(item)
            else:
                stack.append((self.rules[item], 0))
        if run:
            yield tuple(run)

    def expand(self, x: int) -> Iterator[str]:
        stack: list[tuple[tuple[Item, ...], int]] = [(self.rules[x], 0)]
        while stack:
            items, i = stack[-1]
            if i == len(items):
                stack.pop()
                continue
            stack[-1] = (items, i + 1)
            item = items[i]
            if isinstance(item, str):
                yield item
            else:
                stack.append((self.rules[item], 0))


@dataclass(frozen=True)
class Slp:
    store: SlpStore
    root: int

    @property
    def length(self) -> int:
        return self.store.lengths[self.root]

    def expand(self) -> Iterator[str]:
        return chain.from_iterable(self.store.chunks(self.root))

    def to_list(self) -> list[str]:
        return list(self.expand())

    def __repr__(self) -> str:
        return f"<Slp rule {self.root}, length {self.length}>"


def slp_from_rules(rules: Mapping[str, Sequence[str]], root: str, store: SlpStore | None = None) -> Slp:
    """Build from named rules; items naming a rule are references, others terminals."""
    store = store or SlpStore()
    ids: dict[str, int] = {}
    from ._util import postorder

    for name in postorder([root], lambda n: [x for x in rules[n] if x in rules]):
        ids[name] = store.add(ids[x] if x in rules else x for x in rules[name])
    return Slp(store, ids[root])


def slp_from_string(symbols: Iterable[str], store: SlpStore | None = None) -> Slp:
    store = store or SlpStore()
    return Slp(store, store.add(tuple(symbols)))


def dump_slp(s: Slp) -> str:
    """Debug listing ``X<id> = a X<j> ...`` of the rules reachable from s."""
    from ._util import postorder

    store = s.store
    order = postorder([s.root], lambda x: [i for i in store.rules[x] if not isinstance(i, str)])
    lines = []
    for x in reversed(order):
        body = " ".join(f"X{i}" if not isinstance(i, str) else i for i in store.rules[x])
        lines.append(f"X{x} = {body}".rstrip())
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- equality

@dataclass(frozen=True)
class EqualityPolicy:
    """How equality of compressed strings is decided.

    ``fingerprint``: Karp-Rabin fingerprints modulo ``prime_count`` random primes
    drawn from ``seed``; strings of length at most ``exact_threshold`` are settled
    exactly whenever fingerprints cannot already prove them different.  Order
    comparisons scan symbol by symbol up to ``scan_threshold`` and otherwise
    binary-search the first difference with prefix fingerprints.
    ``exact``: always expand, refusing strings longer than ``max_length``.
    """

    mode: str = "fingerprint"
    prime_count: int = 3
    seed: int = 0
    exact_threshold: int = 10**6
    max_length: int = 10**7
    scan_threshold: int = 4096

    def __post_init__(self) -> None:
        if self.mode not in ("fingerprint", "exact"):
            raise ValueError(f"unknown equality mode {self.mode!r}")
        if self.prime_count < 1:
            raise ValueError("prime_count must be positive")


DEFAULT_POLICY = EqualityPolicy()


class _Fingerprinter:
    def __init__(self, seed: int, count: int) -> None:
        rng = random.Random(f"treegram-fingerprint-{seed}")
        self.primes = []
        while len(self.primes) < count:
            p = int(gmpy2.next_prime(rng.getrandbits(62) | (1 << 61)))
            if p not in self.primes:
                self.primes.append(p)
        self.bases = [rng.randrange(2, p - 1) for p in self.primes]
        self.key = hashlib.blake2b(f"labels-{seed}".encode(), digest_size=16).digest()
        self.ident = (seed, count)
        self._labels: dict[str, tuple[tuple[int, int], ...]] = {}

    def label(self, label: str) -> tuple[tuple[int, int], ...]:
        fp = self._labels.get(label)
        if fp is None:
            v = int.from_bytes(hashlib.blake2b(label.encode(), key=self.key, digest_size=16).digest(), "big")
            fp = self._labels[label] = tuple((v % p, b) for p, b in zip(self.primes, self.bases))
        return fp

    def of(self, store: SlpStore, x: int) -> tuple[tuple[int, int], ...]:
        table = store._fp.setdefault(self.ident, [])
        if len(table) < len(store.rules):
            table.extend([None] * (len(store.rules) - len(table)))
        if table[x] is not None:
            return table[x]
        primes = self.primes
        stack = [x]
        while stack:
            y = stack[-1]
            if table[y] is not None:
                stack.pop()
                continue
            pending = [i for i in store.rules[y] if not isinstance(i, str) and table[i] is None]
            if pending:
                stack.extend(pending)
                continue
            stack.pop()
            acc = [(0, 1)] * len(primes)
            for item in store.rules[y]:
                part = self.label(item) if isinstance(item, str) else table[item]
                acc = [
                    ((h * pw2 + h2) % p, (pw * pw2) % p)
                    for (h, pw), (h2, pw2), p in zip(acc, part, primes)
                ]
            table[y] = tuple(acc)
        return table[x]


    def prefix(self, store: SlpStore, x: int, r: int) -> tuple[int, ...]:
        """Fingerprint of the first r symbols of x, without building new rules."""
        primes = self.primes
        acc = [(0, 1)] * len(primes)

        def push(part: tuple[tuple[int, int], ...]) -> None:
            nonlocal acc
            acc = [((h * pw2 + h2) % p, (pw * pw2) % p) for (h, pw), (h2, pw2), p in zip(acc, part, primes)]

        cur: Item = x
        while r > 0:
            if isinstance(cur, str):
                push(self.label(cur))
                break
            if r == store.lengths[cur]:
                push(self.of(store, cur))
                break
            i, off = store._locate(cur, r)
            for item in store.rules[cur][:i]:
                push(self.label(item) if isinstance(item, str) else self.of(store, item))
            r -= off
            cur = store.rules[cur][i]
        return tuple(h for h, _ in acc)


@lru_cache(maxsize=64)
def _fingerprinter(seed: int, count: int) -> _Fingerprinter:
    return _Fingerprinter(seed, count)


def fingerprint(s: Slp, policy: EqualityPolicy = DEFAULT_POLICY) -> tuple[int, ...]:
    fp = _fingerprinter(policy.seed, policy.prime_count).of(s.store, s.root)
    return tuple(h for h, _ in fp)


def value_key(s: Slp, policy: EqualityPolicy = DEFAULT_POLICY) -> tuple:
    """A hashable key that is equal for equal strings (used for bucketing)."""
    if policy.mode == "exact":
        return (s.length, tuple(_expand_checked(s, policy)))
    return (s.length, fingerprint(s, policy))


def _expand_checked(s: Slp, policy: EqualityPolicy) -> Iterator[str]:
    if s.length > policy.max_length:
        raise SlpError(f"exact comparison refused: length {s.length} exceeds {policy.max_length}")
    return s.expand()


def _first_difference(a: Slp, b: Slp) -> int | None:
    """0-based position of the first differing symbol within the common length."""
    ia, ib = a.store.chunks(a.root), b.store.chunks(b.root)
    ca: tuple[str, ...] = ()
    cb: tuple[str, ...] = ()
    pa = pb = pos = 0
    while True:
        if pa == len(ca):
            ca, pa = next(ia, None), 0  # type: ignore[assignment]
            if ca is None:
                return None
        if pb == len(cb):
            cb, pb = next(ib, None), 0  # type: ignore[assignment]
            if cb is None:
                return None
        n = min(len(ca) - pa, len(cb) - pb)
        if ca[pa:pa + n] != cb[pb:pb + n]:
            k = next(k for k in range(n) if ca[pa + k] != cb[pb + k])
            return pos + k
        pa += n
        pb += n
        pos += n


def _exact_equal(a: Slp, b: Slp) -> bool:
    if a.store is b.store and a.root == b.root:
        return True
    return a.length == b.length and _first_difference(a, b) is None


def slp_equal(a: Slp, b: Slp, policy: EqualityPolicy = DEFAULT_POLICY) -> bool:
    if a.length != b.length:
        return False
    if a.store is b.store and a.root == b.root:
        return True
    if policy.mode == "exact":
        _expand_checked(a, policy)
        _expand_checked(b, policy)
        return _exact_equal(a, b)
    if fingerprint(a, policy) != fingerprint(b, policy):
        return False
    if a.length <= policy.exact_threshold:
        return _exact_equal(a, b)
    return True


def slp_length(s: Slp) -> int:
    return s.length


def slp_slice(s: Slp, l: int, r: int) -> Slp:
    """The substring from position l to r, both 1-based and inclusive."""
    if not 1 <= l <= r <= s.length:
        raise SlpError(f"slice [{l}, {r}] out of range for length {s.length}")
    return Slp(s.store, s.store.slice(s.root, l, r))


def slp_symbol_at(s: Slp, i: int) -> str:
    if not 1 <= i <= s.length:
        raise SlpError(f"position {i} out of range for length {s.length}")
    return s.store.symbol_at(s.root, i)


def _prefix(s: Slp, r: int) -> Slp:
    return Slp(s.store, s.store.prefix(s.root, r))


def _scan_compare(a: Slp, b: Slp, order: LabelOrder) -> Order:
    d = _first_difference(a, b)
    if d is None:
        return Order.EQUAL if a.length == b.length else (Order.LESS if a.length < b.length else Order.GREATER)
    return order.compare(slp_symbol_at(a, d + 1), slp_symbol_at(b, d + 1))


def slp_compare_llex(
    a: Slp, b: Slp, order: LabelOrder = DEFAULT_ORDER, policy: EqualityPolicy = DEFAULT_POLICY
) -> Order:
    """Length first, then lexicographic by the label order."""
    n = a.length
    if n != b.length:
        return Order.LESS if n < b.length else Order.GREATER
    if a.store is b.store and a.root == b.root:
        return Order.EQUAL
    if policy.mode == "exact":
        _expand_checked(a, policy)
        return _scan_compare(a, b, order)
    if n <= policy.scan_threshold:
        return _scan_compare(a, b, order)
    if fingerprint(a, policy) == fingerprint(b, policy):
        if n > policy.exact_threshold or _exact_equal(a, b):
            return Order.EQUAL
        return _scan_compare(a, b, order)  # a fingerprint collision
    # invariant: prefixes of length lo agree, prefixes of length hi differ
    fp = _fingerprinter(policy.seed, policy.prime_count)
    lo, hi = 0, n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if fp.prefix(a.store, a.root, mid) == fp.prefix(b.store, b.root, mid):
            lo = mid
        else:
            hi = mid
    x, y = slp_symbol_at(a, hi), slp_symbol_at(b, hi)
    if x == y:
        raise SlpError("inconsistent fingerprints; retry with another seed or more primes")
    return order.compare(x, y)


# --------------------------------------------------------- dflr of grammars

class DflrSlps:
    """dflr SLPs of a normal grammar: tree[A] for rank 0, (pre[B], suf[B]) for rank 1."""

    def __init__(self, g: NormalGrammar | None = None, store: SlpStore | None = None) -> None:
        self.store = store or SlpStore()
        self.tree: dict[str, int] = {}
        self.pre: dict[str, int] = {}
        self.suf: dict[str, int] = {}
        if g is not None:
            for name in g.order:
                self.define(name, g.prods[name])

    def define(self, name: str, p: Production) -> None:
        add = self.store.add
        if isinstance(p, Branch):
            self.tree[name] = add((p.label,) + tuple(self.tree[a] for a in p.args))
        elif isinstance(p, Apply):
            self.tree[name] = add((self.pre[p.ctx], self.tree[p.arg], self.suf[p.ctx]))
        elif isinstance(p, Hole):
            self.pre[name] = add((p.label,) + tuple(self.tree[a] for a in p.left))
            self.suf[name] = add(tuple(self.tree[a] for a in p.right))
        else:
            self.pre[name] = add((self.pre[p.outer], self.pre[p.inner]))
            self.suf[name] = add((self.suf[p.inner], self.suf[p.outer]))

    def slp(self, name: str) -> Slp:
        return Slp(self.store, self.tree[name])

    def pre_slp(self, name: str) -> Slp:
        return Slp(self.store, self.pre[name])

    def suf_slp(self, name: str) -> Slp:
        return Slp(self.store, self.suf[name])


def build_dflr(g: NormalGrammar) -> DflrSlps:
    return DflrSlps(g)


def compare_values(
    g: NormalGrammar,
    a: str,
    b: str,
    order: LabelOrder = DEFAULT_ORDER,
    policy: EqualityPolicy = DEFAULT_POLICY,
    dflr: DflrSlps | None = None,
) -> Order:
    d = dflr or DflrSlps(g)
    return slp_compare_llex(d.slp(a), d.slp(b), order, policy)
