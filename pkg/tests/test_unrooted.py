import random

import pytest

from corpus import corpus, random_path
from treegram.grammar import Grammar, GrammarError, Rule, Sym, eval_grammar, even_grammar, parse_grammar, tree_to_dag
from treegram.normal import normalize
from treegram.terms import ahu_canon, naive_center, naive_iso_unrooted, naive_reroot, parse_term, subtree_at, tree_diameter
from treegram.unrooted import (
    CompressedPath,
    PathError,
    address_tuple,
    center_rooted,
    expand_path,
    find_center,
    iso_unrooted,
    mixed_stats,
    reroot,
    resolve_path,
    rooty,
)
from treegram.unrooted import _plug, _sym_at


def dag(text: str):
    return normalize(tree_to_dag(parse_term(text)))


def test_path_serialization_round_trip():
    p = CompressedPath((("S", (1, 2)), ("B", ())))
    assert str(p) == "S@1.2 / B@ε"
    assert CompressedPath.parse(str(p)) == p
    assert CompressedPath.parse("S@e") == CompressedPath((("S", ()),))
    for bad in ["S", "S@0", "S@1..2", "@1"]:
        with pytest.raises(PathError):
            CompressedPath.parse(bad)


def test_center_of_small_trees():
    g = dag("f(g(a),h(b))")
    p = find_center(g)
    assert address_tuple(resolve_path(g, p)[0]) == ()
    assert resolve_path(g, p)[1] == 0
    g = dag("f(a,g(h(b)))")
    assert address_tuple(resolve_path(g, find_center(g))[0]) == (2,)


def test_odd_diameter_is_rejected():
    with pytest.raises(GrammarError):
        find_center(dag("f(a,g(b))"))


def test_even_path_center_is_middle():
    g = normalize(even_grammar(parse_grammar("slt v1\nS = f(g(h(a)))\n")))
    p = find_center(g)
    u = address_tuple(resolve_path(g, p)[0])
    assert u == (1, 1, 1)
    assert resolve_path(g, p)[1] == 3


def test_bad_paths():
    g = dag("f(a,g(b))")
    with pytest.raises(PathError):
        resolve_path(g, CompressedPath((("Nope", ()),)))
    with pytest.raises(PathError):
        resolve_path(g, CompressedPath(((g.start, (9,)),)))


def test_center_and_reroot_against_oracles():
    count = 0
    for g in corpus(150, 3000):
        e = normalize(even_grammar(g.to_grammar()))
        t = e.eval()
        p = find_center(e)
        slp, depth = resolve_path(e, p)
        u = address_tuple(slp)
        assert u == naive_center(t)
        assert depth == len(u)
        assert ahu_canon(reroot(e, p).eval()) == ahu_canon(naive_reroot(t, u))
        count += 1
    assert count == 150


def test_reroot_at_random_paths():
    rng = random.Random(4)
    for g in corpus(150, 3000):
        t = g.eval()
        p = random_path(g, rng)
        u = address_tuple(resolve_path(g, p)[0])
        ex = expand_path(g, p)
        # ex.u addresses the node inside the partially expanded tree ex.t
        assert _sym_at(ex.t, ex.u).name == ex.sigma == subtree_at(t, u).label
        assert ex.t.kind == "t" and ex.delta == t.label
        r = reroot(g, p)
        assert ahu_canon(r.eval()) == ahu_canon(naive_reroot(t, u))
        assert tree_diameter(r.eval()) == tree_diameter(t)


def test_reroot_at_root_is_identity():
    g = dag("f(a,g(b))")
    assert reroot(g, CompressedPath(((g.start, ()),))) == g


def test_reroot_round_trip():
    g = dag("f(a,g(b,h(c)))")
    t = g.eval()
    p = CompressedPath.parse(f"{g.start}@ε")
    rng = random.Random(0)
    for _ in range(10):
        q = random_path(g, rng)
        r = reroot(g, q)
        assert naive_iso_unrooted(r.eval(), t)
    assert reroot(g, p).eval() == t


def test_center_trace_invariant():
    for g in corpus(60, 2000):
        e = normalize(even_grammar(g.to_grammar()))
        want = e.eval()
        steps = []
        find_center(e, trace=steps.append)
        base = e.to_grammar()
        for s in steps:
            node = Sym("n", s.nonterminal, [s.t_r] if s.t_r is not None else [])
            rules = dict(base.rules)
            rules["Zwhole"] = Rule((), _plug(s.t_l, node))
            assert eval_grammar(Grammar(rules, "Zwhole")) == want


def test_mixed_stats_on_start():
    g = dag("f(g(a),h(b))")
    s = mixed_stats(g, Sym("n", g.start))
    assert (s.size, s.height, s.diameter) == (5, 2, 4)


def test_rooty_reverses_spine():
    c = Sym("t", "f", [Sym("t", "a"), Sym("t", "g", [Sym("p", "y")])])
    r = rooty(c)
    assert r.name == "g"


def test_iso_unrooted():
    a = tree_to_dag(parse_term("f(a,g(b))"))
    b = tree_to_dag(parse_term("g(b,f(a))"))
    c = tree_to_dag(parse_term("f(a,g,b)"))
    assert iso_unrooted(a, b)
    assert not iso_unrooted(a, c)
    rng = random.Random(8)
    for g in corpus(40, 1500):
        p = random_path(g, rng)
        assert iso_unrooted(g, reroot(g, p))
        assert center_rooted(g).size_of() >= g.size_of()
