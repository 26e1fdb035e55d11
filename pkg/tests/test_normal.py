import random

import pytest

from corpus import corpus
from treegram.grammar import Grammar, GrammarError, Rule, Sym, eval_grammar, parse_grammar
from treegram.normal import (
    Apply,
    Branch,
    Compose,
    Hole,
    NormalGrammar,
    RandomParams,
    gen_random,
    normalize,
    ranked_normal,
    stats,
)
from treegram.terms import Tree, ranked_tree, tree_diameter, tree_height

HOLE = "\x01hole"


def _distances(t: Tree, target: Tree) -> int:
    """Eccentricity of the node `target` (by identity) in t; t must not share subtrees."""
    adj: dict[int, list[Tree]] = {}
    nodes = {}
    for node in t.preorder():
        nodes[id(node)] = node
        for c in node.children:
            adj.setdefault(id(node), []).append(c)
            adj.setdefault(id(c), []).append(node)
    dist = {id(target): 0}
    frontier = [target]
    while frontier:
        nxt = []
        for x in frontier:
            for y in adj.get(id(x), []):
                if id(y) not in dist:
                    dist[id(y)] = dist[id(x)] + 1
                    nxt.append(y)
        frontier = nxt
    return max(dist.values())


def _value(g: NormalGrammar, name: str) -> Tree:
    gg = g.to_grammar()
    rules = dict(gg.rules)
    hole = [Sym("t", HOLE)] if g.rank(name) else []
    rules["Zroot"] = Rule((), Sym("n", name, hole))
    return eval_grammar(Grammar(rules, "Zroot"))


def _hole_path(t: Tree) -> tuple[int, Tree]:
    stack = [(t, 0)]
    while stack:
        node, d = stack.pop()
        if node.label == HOLE:
            return d, node
        stack.extend((c, d + 1) for c in node.children)
    raise AssertionError("no hole")


def _unshare(t: Tree) -> Tree:
    return Tree(t.label, [_unshare(c) for c in t.children])


def test_normalize_example():
    g = parse_grammar("slt v1\nS = A(B(a))\nA(y) = f(b, g(y))\nB(y) = A(A(y))\n")
    ng = normalize(g)
    assert ng.eval() == eval_grammar(g)
    kinds = {type(p) for p in ng.prods.values()}
    assert kinds <= {Branch, Hole, Apply, Compose}


def test_normalize_drops_unused_argument_and_identity():
    g = parse_grammar("slt v1\nS = A(I(a))\nA(y) = b\nI(y) = y\n")
    assert str(normalize(g).eval()) == "b"


def test_normalize_rejects_rank_two():
    g = parse_grammar("slt v1\nS = A(a, b)\nA(y1, y2) = f(y1, y2)\n")
    with pytest.raises(GrammarError):
        normalize(g)


def test_normal_grammar_validation():
    with pytest.raises(GrammarError):
        NormalGrammar({"S": Hole("f", (), ())}, "S")
    with pytest.raises(GrammarError):
        NormalGrammar({"S": Apply("C", "S")}, "S")
    with pytest.raises(GrammarError):
        NormalGrammar({"S": Branch("f", ("X",))}, "S")


def test_size_counts_right_hand_sides():
    g = NormalGrammar(
        {"a": Branch("a", ()), "H": Hole("f", ("a",), ()), "C": Compose("H", "H"), "S": Apply("C", "a")}, "S"
    )
    assert g.size == 1 + 3 + 3 + 2
    assert str(g.eval()) == "f(a,f(a,a))"


def test_gen_random_is_deterministic():
    p = RandomParams(nonterminals=20)
    assert gen_random(5, p) == gen_random(5, p)
    assert any(gen_random(5, p) != gen_random(s, p) for s in range(6, 10))


def test_ranked_normal():
    g = corpus(5, 2000)[0]
    assert ranked_normal(g).eval() == ranked_tree(g.eval())


def test_stats_match_explicit_trees():
    checked = 0
    for g in corpus(120, 3000):
        table = stats(g)
        for name in g.order:
            t = _unshare(_value(g, name))
            s = table[name]
            assert s.size == t.size
            assert s.height == tree_height(t)
            assert s.diameter == tree_diameter(t)
            if g.rank(name):
                depth, hole = _hole_path(t)
                assert s.rty == depth
                assert s.ecc == _distances(t, hole)
            else:
                assert s.rty is None
            checked += 1
    assert checked > 500


def test_stats_are_exact_big_integers():
    prods = {"a": Branch("a", ()), "H": Hole("f", ("a",), ()), "C0": Compose("H", "H")}
    for i in range(1, 80):
        prods[f"C{i}"] = Compose(f"C{i - 1}", f"C{i - 1}")
    prods["S"] = Apply("C79", "a")
    g = NormalGrammar(prods, "S")
    s = stats(g)["S"]
    assert s.size == 2 * 2**80 + 1
    assert s.height == 2**80
    assert s.diameter == 2**80 + 1
