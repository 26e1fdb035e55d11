"""Canonization, isomorphism, re-rooting and bisimulation on grammar-compressed trees."""

from .bisim import bcanon_grammar, bisim_equal
from .canonize import canonize, iso_rooted
from .grammar import (
    EvalTooLarge,
    Grammar,
    GrammarError,
    eval_grammar,
    even_grammar,
    format_grammar,
    height_of,
    parse_grammar,
    size_of,
    tree_to_dag,
)
from .normal import NormalGrammar, gen_random, normalize, stats
from .slp import EqualityPolicy, slp_compare_llex, slp_equal, slp_slice
from .st import BudgetExceeded, ExpansionBudget, copy_family, iso_st, qbf_eval, qbf_parse, qbf_to_st, st_to_dag
from .terms import Tree, ahu_canon, parse_term, unparse
from .unrooted import CompressedPath, find_center, iso_unrooted, reroot

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "CompressedPath",
    "EqualityPolicy",
    "EvalTooLarge",
    "ExpansionBudget",
    "Grammar",
    "GrammarError",
    "NormalGrammar",
    "Tree",
    "ahu_canon",
    "bcanon_grammar",
    "bisim_equal",
    "canonize",
    "copy_family",
    "eval_grammar",
    "even_grammar",
    "find_center",
    "format_grammar",
    "gen_random",
    "height_of",
    "iso_rooted",
    "iso_st",
    "iso_unrooted",
    "normalize",
    "parse_grammar",
    "parse_term",
    "qbf_eval",
    "qbf_parse",
    "qbf_to_st",
    "reroot",
    "size_of",
    "slp_compare_llex",
    "slp_equal",
    "slp_slice",
    "st_to_dag",
    "stats",
    "tree_to_dag",
    "unparse",
]
