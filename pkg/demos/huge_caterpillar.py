"""Canonize, center and compare trees with about 2^60 nodes without ever expanding them."""

import time

from treegram import bisim_equal, canonize, even_grammar, find_center, iso_rooted, normalize, stats
from treegram.canonize import prepare
from treegram.normal import Apply, Branch, Compose, Hole, NormalGrammar
from treegram.unrooted import resolve_path


def caterpillar(levels: int, mirrored: bool = False) -> NormalGrammar:
    p = {"a": Branch("a", ()), "L0": Branch("g", ("a",))}
    for i in range(1, levels):
        p[f"L{i}"] = Branch("g", (f"L{i - 1}",))
    for i in range(levels):
        left = (i % 2 == 0) != mirrored
        p[f"H{i}"] = Hole("f", (f"L{i}",), ()) if left else Hole("f", (), (f"L{i}",))
    p["C0"] = p["H0"]
    for i in range(1, levels):
        p[f"K{i}"] = Compose(f"H{i}", f"C{i - 1}")
        p[f"C{i}"] = Compose(f"C{i - 1}", f"K{i}")
    p["S"] = Apply(f"C{levels - 1}", "a")
    return NormalGrammar(p, "S")


g, h = caterpillar(58), caterpillar(58, mirrored=True)
s = stats(g)["S"]
print(f"{len(g.prods)} productions; size {s.size}, height {s.height}, diameter {s.diameter}")

t = time.perf_counter()
c = canonize(prepare(g))
print(f"canonized to {len(c.prods)} productions in {time.perf_counter() - t:.2f}s")

t = time.perf_counter()
print("mirror image isomorphic:", iso_rooted(g, h), f"({time.perf_counter() - t:.2f}s)")
print("mirror image bisimilar:", bisim_equal(g, h))

e = normalize(even_grammar(g.to_grammar()))
p = find_center(e)
print("center of the subdivided tree:", p)
print("its depth:", resolve_path(e, p)[1])
