"""Quantified boolean formulas become isomorphism questions about pairs of copying grammars."""

from treegram import format_grammar, iso_st, qbf_eval, qbf_parse, qbf_to_st
from treegram.st import bisim_st

for text in ["E z. z", "A z. z", "A x. E y. (x | !y) & (!x | y)", "E y. A x. (x | !y) & (!x | y)"]:
    f = qbf_parse(text)
    a, b = qbf_to_st(f)
    print(f"{text:35} true={qbf_eval(f)!s:5} iso={iso_st(a, b)!s:5} bisim={bisim_st(a, b)}")

a, _ = qbf_to_st(qbf_parse("A x. E y. (x | !y) & (!x | y)"))
print()
print(format_grammar(a))
