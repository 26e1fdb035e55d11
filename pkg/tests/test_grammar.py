import random

import pytest

from corpus import corpus, random_tree
from treegram.grammar import (
    EvalTooLarge,
    GrammarError,
    eval_grammar,
    even_grammar,
    format_grammar,
    height_of,
    parse_grammar,
    ranked_grammar,
    size_of,
    tree_to_dag,
)
from treegram.st import copy_family
from treegram.terms import naive_even, parse_term, ranked_tree, tree_height

CONTEXTS = """slt v1
start S
S = A(B(a))
A(y) = f(b, y)
B(y) = A(A(y))
"""


def test_parse_and_eval():
    g = parse_grammar(CONTEXTS)
    assert str(eval_grammar(g)) == "f(b,f(b,f(b,a)))"
    assert size_of(g) == 7
    assert height_of(g) == 3
    assert g.linear and g.rank("A") == 1


def test_format_round_trip():
    g = parse_grammar(CONTEXTS)
    h = parse_grammar(format_grammar(g))
    assert eval_grammar(h) == eval_grammar(g)
    assert format_grammar(h) == format_grammar(g)


def test_quoted_symbols_are_terminals():
    g = parse_grammar("slt v1\nS = f('A', A)\nA = a\n")
    assert str(eval_grammar(g)) == "f(A,a)"
    assert "'A'" in format_grammar(g)


def test_first_production_is_default_start_and_unreachable_pruned():
    g = parse_grammar("slt v1\nS = a\nU = b\n")
    assert g.start == "S" and list(g.rules) == ["S"]


@pytest.mark.parametrize(
    "text",
    [
        "",
        "foo\nS = a\n",
        "slt v1\n",
        "slt v1\nS = A\nA = S\n",
        "slt v1\nS = A(a)\nA = b\n",
        "slt v1\nS(y) = y\n",
        "slt v1\nS = a\nS = b\n",
        "slt v1\nS = A(a)\nA(y) = f(y, y)\n",
        "slt v1\nS = A(a)\nA(y) = f(y2)\n",
        "slt v1\nS = f(a\n",
        "slt v1\nstart T\nS = a\n",
    ],
)
def test_rejects_bad_grammars(text):
    with pytest.raises(GrammarError):
        parse_grammar(text)


def test_st_header_allows_copying():
    g = parse_grammar("st v1\nS = A(a)\nA(y) = f(y, y)\n")
    assert not g.linear
    assert str(eval_grammar(g)) == "f(a,a)"


def test_copy_family_sizes_and_heights():
    for n, want in enumerate([3, 7, 31, 511, 131071]):
        assert size_of(copy_family(n)) == want == 2 ** (2**n + 1) - 1
        assert height_of(copy_family(n)) == 2**n
    assert size_of(copy_family(12)) == 2 ** (2**12 + 1) - 1


def test_eval_guard_reports_exact_size():
    with pytest.raises(EvalTooLarge) as e:
        eval_grammar(copy_family(6), max_nodes=1000)
    assert e.value.size == 2 ** 65 - 1


def test_tree_to_dag_shares_subtrees():
    t = parse_term("f(g(a,a),g(a,a))")
    g = tree_to_dag(t)
    assert eval_grammar(g) == t
    assert len(g.rules) == 3


def test_dag_and_even_against_oracles():
    rng = random.Random(11)
    for _ in range(200):
        t = random_tree(rng, rng.randint(1, 30))
        g = tree_to_dag(t)
        assert eval_grammar(g) == t
        assert size_of(g) == t.size and height_of(g) == tree_height(t)
        assert eval_grammar(even_grammar(g)) == naive_even(t)
        assert eval_grammar(ranked_grammar(g)) == ranked_tree(t)


def test_corpus_sizes_match_eval():
    for ng in corpus(40, 3000):
        g = ng.to_grammar()
        t = eval_grammar(g)
        assert size_of(g) == t.size == ng.size_of()
        assert height_of(g) == tree_height(t)
