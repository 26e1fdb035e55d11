"""Bisimulation canons of compressed trees and bisimulation equivalence."""

from __future__ import annotations

from .canonize import _Engine, prepare
from .grammar import Grammar
from .normal import NormalGrammar
from .slp import DEFAULT_POLICY, EqualityPolicy, Slp, slp_equal
from .terms import DEFAULT_ORDER, LabelOrder

__all__ = ["bcanon_grammar", "bcanon_with_slp", "bisim_equal"]


def bcanon_with_slp(
    g: NormalGrammar,
    order: LabelOrder = DEFAULT_ORDER,
    policy: EqualityPolicy = DEFAULT_POLICY,
) -> tuple[NormalGrammar, Slp]:
    return _Engine(g, order, policy, bisim=True).run()


def bcanon_grammar(
    g: NormalGrammar,
    order: LabelOrder = DEFAULT_ORDER,
    policy: EqualityPolicy = DEFAULT_POLICY,
) -> NormalGrammar:
    """A grammar for the bisimulation canon of val(g), in canonical sibling order.

    g must be ranked.  Labels of nodes that lose children are re-ranked, so the
    output is again a ranked grammar.
    """
    return bcanon_with_slp(g, order, policy)[0]


def bisim_equal(
    g1: Grammar | NormalGrammar,
    g2: Grammar | NormalGrammar,
    order: LabelOrder = DEFAULT_ORDER,
    policy: EqualityPolicy = DEFAULT_POLICY,
    ranked: bool = False,
) -> bool:
    """Are val(g1) and val(g2) bisimilar (as unordered trees)?

    Both bisimulation canons come out in canonical order already, so comparing
    them for isomorphism reduces to comparing their dflr strings.
    """
    _, a = bcanon_with_slp(prepare(g1, policy, ranked), order, policy)
    _, b = bcanon_with_slp(prepare(g2, policy, ranked), order, policy)
    return slp_equal(a, b, policy)
