import random

import pytest

from corpus import corpus, random_slp
from treegram.normal import Apply, Branch, Compose, Hole, NormalGrammar, ranked_normal
from treegram.slp import (
    DflrSlps,
    EqualityPolicy,
    Slp,
    SlpError,
    SlpStore,
    compare_values,
    dump_slp,
    fingerprint,
    slp_compare_llex,
    slp_equal,
    slp_from_rules,
    slp_from_string,
    slp_slice,
    slp_symbol_at,
    value_key,
)
from treegram.terms import DEFAULT_ORDER, Order, dflr, llex_compare_trees

FP_ONLY = EqualityPolicy(exact_threshold=0, scan_threshold=0)


def explicit_llex(a: list[str], b: list[str]) -> Order:
    if len(a) != len(b):
        return Order.LESS if len(a) < len(b) else Order.GREATER
    for x, y in zip(a, b):
        if x != y:
            return DEFAULT_ORDER.compare(x, y)
    return Order.EQUAL


def test_from_rules_and_expand():
    s = slp_from_rules({"X": ["Y", "Y", "c"], "Y": ["a", "b"]}, "X")
    assert s.to_list() == list("ababc")
    assert s.length == 5
    assert "X" in dump_slp(s)


def test_doubling_gives_huge_exact_lengths():
    store = SlpStore()
    x = store.add(("a", "b"))
    for _ in range(100):
        x = store.add((x, x))
    assert store.lengths[x] == 2**101
    assert store.symbol_at(x, 2**101) == "b"
    big = Slp(store, x)
    assert slp_slice(big, 2**100 + 1, 2**100 + 2).to_list() == ["a", "b"]


def test_slice_bounds():
    s = slp_from_string("abc")
    with pytest.raises(SlpError):
        slp_slice(s, 0, 2)
    with pytest.raises(SlpError):
        slp_slice(s, 2, 4)
    with pytest.raises(SlpError):
        slp_symbol_at(s, 4)


def test_slice_and_symbol_at_random():
    rng = random.Random(1)
    for _ in range(30):
        store = SlpStore()
        s = random_slp(rng, store, 80)
        text = s.to_list()
        for l in range(1, len(text) + 1):
            assert slp_symbol_at(s, l) == text[l - 1]
            for r in range(l, len(text) + 1):
                assert slp_slice(s, l, r).to_list() == text[l - 1:r]


@pytest.mark.parametrize("policy", [EqualityPolicy(), FP_ONLY, EqualityPolicy(mode="exact")])
def test_equal_and_compare_random(policy):
    rng = random.Random(2)
    store = SlpStore()
    slps = [random_slp(rng, store, 60) for _ in range(60)]
    for a in slps:
        for b in slps[:20]:
            ta, tb = a.to_list(), b.to_list()
            assert slp_equal(a, b, policy) == (ta == tb)
            assert slp_compare_llex(a, b, DEFAULT_ORDER, policy) == explicit_llex(ta, tb)


def test_equal_across_stores_and_value_key():
    a = slp_from_rules({"X": ["Y", "Y"], "Y": ["a", "b"]}, "X")
    b = slp_from_string("abab")
    assert slp_equal(a, b) and slp_equal(a, b, FP_ONLY)
    assert value_key(a) == value_key(b)
    assert fingerprint(a) == fingerprint(b)
    assert not slp_equal(a, slp_from_string("abba"), FP_ONLY)


def test_long_strings_use_prefix_search():
    store = SlpStore()
    x = store.add(("a",))
    y = store.add(("a",))
    for _ in range(60):
        x = store.add((x, x))
        y = store.add((y, y))
    b_tail = store.add((store.prefix(y, 2**60 - 1), "b"))
    a, b = Slp(store, x), Slp(store, b_tail)
    assert slp_compare_llex(a, b) == Order.LESS
    assert slp_compare_llex(b, a) == Order.GREATER
    assert slp_compare_llex(a, Slp(store, y)) == Order.EQUAL
    assert not slp_equal(a, b)


def test_exact_mode_refuses_huge_strings():
    store = SlpStore()
    x = store.add(("a", "b"))
    y = store.add(("a", "c"))
    for _ in range(40):
        x, y = store.add((x, x)), store.add((y, y))
    with pytest.raises(SlpError):
        slp_equal(Slp(store, x), Slp(store, y), EqualityPolicy(mode="exact"))


def test_policy_validation():
    with pytest.raises(ValueError):
        EqualityPolicy(mode="maybe")
    with pytest.raises(ValueError):
        EqualityPolicy(prime_count=0)


def test_dflr_slps_and_compare_values():
    g = NormalGrammar(
        {"a": Branch("a", ()), "b": Branch("b", ()), "H": Hole("f", ("a",), ("b",)),
         "C": Compose("H", "H"), "S": Apply("C", "a")},
        "S",
    )
    d = DflrSlps(g)
    assert tuple(d.slp("S").to_list()) == dflr(g.eval())
    assert d.pre_slp("C").to_list() == ["f", "a", "f", "a"]
    assert d.suf_slp("C").to_list() == ["b", "b"]
    assert compare_values(g, "a", "b") == Order.LESS


def test_dflr_of_corpus_values():
    # dflr strings determine trees only once labels carry their ranks
    for g in map(ranked_normal, corpus(30, 2000)):
        d = DflrSlps(g)
        for name in g.order:
            if g.rank(name) == 0:
                t = NormalGrammar(g.prods, name).eval()
                assert tuple(d.slp(name).to_list()) == dflr(t)
        names = [n for n in g.order if g.rank(n) == 0][:6]
        for x in names:
            for y in names:
                tx, ty = NormalGrammar(g.prods, x).eval(), NormalGrammar(g.prods, y).eval()
                assert compare_values(g, x, y, dflr=d) == llex_compare_trees(tx, ty)
