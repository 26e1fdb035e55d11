import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import random_tree
from treegram.terms import (
    Order,
    TermSyntaxError,
    TreeError,
    Tree,
    ahu_canon,
    bisim_classes,
    brute_force_iso,
    dflr,
    llex_compare_trees,
    naive_bcanon,
    naive_bisim,
    naive_center,
    naive_even,
    naive_iso_unrooted,
    naive_reroot,
    parse_term,
    ranked_tree,
    split_rank,
    tree_diameter,
    tree_height,
    unparse,
    unranked_tree,
)


def T(s: str) -> Tree:
    return parse_term(s)


def test_parse_unparse_round_trip():
    for s in ["a", "f(a,b)", "f(g(a),h(b,c),d)", "'x y'(a)", "f#2(a#0,b#0)"]:
        assert unparse(T(s)) == s


def test_whitespace_and_quotes():
    assert T(" f ( a , b ) ") == T("f(a,b)")
    assert T("'f'(a)").label == "f"


@pytest.mark.parametrize("bad", ["", "f(", "f(a,)", "f(a))", "()", "f a", "''", "'abc"])
def test_syntax_errors(bad):
    with pytest.raises(TermSyntaxError):
        parse_term(bad)


def test_syntax_error_position():
    with pytest.raises(TermSyntaxError) as e:
        parse_term("f(a,\n  $)")
    assert "line 2" in str(e.value)


def test_ranking_round_trip_and_reserved_hash():
    t = T("f(a, g(b), '#'(c))")
    r = ranked_tree(t)
    assert unparse(r) == "f#3(a#0,g#1(b#0),'##1'(c#0))"
    assert unranked_tree(r) == t
    assert split_rank("f#12") == ("f", 12)


def test_dflr_and_llex():
    assert dflr(T("f(a,g(b))")) == ("f", "a", "g", "b")
    assert llex_compare_trees(T("a"), T("f(a)")) == Order.LESS
    assert llex_compare_trees(T("f(a,b)"), T("f(b,a)")) == Order.LESS
    assert llex_compare_trees(T("f(a)"), T("f(a)")) == Order.EQUAL


def test_ahu_canon_example():
    assert unparse(ahu_canon(ranked_tree(T("f(b,a)")))) == "f#2(a#0,b#0)"
    assert ahu_canon(T("f(g(b,a),a)")) == T("f(a,g(a,b))")


def test_ahu_canon_matches_brute_force():
    rng = random.Random(3)
    for _ in range(300):
        s = random_tree(rng, rng.randint(1, 7), "fa")
        t = random_tree(rng, rng.randint(1, 7), "fa")
        assert (ahu_canon(s) == ahu_canon(t)) == brute_force_iso(s, t)


def test_height_diameter_center():
    t = T("f(g(a),h(b))")
    assert tree_height(t) == 2
    assert tree_diameter(t) == 4
    assert naive_center(t) == ()
    with pytest.raises(TreeError):
        naive_center(T("f(a,g(b))"))
    e = naive_even(T("f(a,g(b))"))
    assert tree_diameter(e) == 6
    assert e.size == 7


def test_reroot_and_unrooted_iso():
    t = T("f(a,g(b))")
    r = naive_reroot(t, (2,))
    assert r.label == "g" and r.size == t.size
    assert naive_iso_unrooted(t, r)
    assert not naive_iso_unrooted(T("f(a,b,c)"), T("f(a(b(c)))"))


def test_bisim_oracle():
    assert naive_bisim(T("f(a,a,a)"), T("f(a,a)"))
    assert naive_bcanon(T("f(a,a,a)")) == T("f(a)")
    assert not naive_bisim(T("f(a,g(a))"), T("f(g(a))"))
    assert naive_bisim(T("f(g(a),g(a,a))"), T("f(g(a))"))
    cls = bisim_classes([T("f(a,a)"), T("f(a)"), T("f(b)")])
    assert cls[0] == cls[1] != cls[2]


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 30), st.integers(0, 10**6))
def test_canon_permutation_invariance(n, seed):
    rng = random.Random(seed)
    t = random_tree(rng, n)

    def shuffle(x: Tree) -> Tree:
        kids = [shuffle(c) for c in x.children]
        rng.shuffle(kids)
        return Tree(x.label, kids)

    assert ahu_canon(shuffle(t)) == ahu_canon(t)
    assert naive_bisim(shuffle(t), t)
