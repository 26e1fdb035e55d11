"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import itertools
import math
import random
import statistics
import time

from corpus import corpus, random_qbf, random_slp, random_tree
from treegram.bisim import bcanon_grammar, bisim_equal
from treegram.canonize import canonize, iso_rooted, prepare
from treegram.grammar import even_grammar, size_of, tree_to_dag
from treegram.normal import Apply, Branch, Compose, Hole, NormalGrammar, normalize, ranked_normal, stats
from treegram.slp import DflrSlps, EqualityPolicy, SlpStore, slp_compare_llex, slp_equal, slp_slice
from treegram.st import copy_family, iso_st, qbf_eval, qbf_parse, qbf_to_st, st_to_dag
from treegram.terms import (
    DEFAULT_ORDER,
    Order,
    ahu_canon,
    naive_bcanon,
    naive_bisim,
    naive_center,
    naive_reroot,
    ranked_tree,
    unranked_tree,
)
from treegram.unrooted import address_tuple, find_center, reroot, resolve_path


def permuted(g: NormalGrammar, rng: random.Random) -> NormalGrammar:
    """Same unordered value, different sibling orders (the hole may move too)."""
    out = {}
    for name, p in g.prods.items():
        if isinstance(p, Branch):
            args = list(p.args)
            rng.shuffle(args)
            out[name] = Branch(p.label, tuple(args))
        elif isinstance(p, Hole):
            kids = [*p.left, None, *p.right]
            rng.shuffle(kids)
            i = kids.index(None)
            out[name] = Hole(p.label, tuple(kids[:i]), tuple(kids[i + 1:]))
        else:
            out[name] = p
    return NormalGrammar(out, g.start)


def iso_corpus() -> list[NormalGrammar]:
    """60 grammars: 30 from the random corpus and a sibling-permuted copy of each."""
    rng = random.Random(60)
    base = list(corpus(30, 2000))
    return base + [permuted(g, rng) for g in base]


def explicit_llex(a: list[str], b: list[str]) -> Order:
    if len(a) != len(b):
        return Order.LESS if len(a) < len(b) else Order.GREATER
    for x, y in zip(a, b):
        if x != y:
            return DEFAULT_ORDER.compare(x, y)
    return Order.EQUAL


def caterpillar(levels: int = 58, mirrored: bool = False, leaf: str = "b") -> NormalGrammar:
    """A spine of ~2^levels f-nodes, each carrying a g-leg of its own height."""
    p = {"a": Branch("a", ()), "b": Branch(leaf, ()), "L0": Branch("g", ("a",))}
    for i in range(1, levels):
        p[f"L{i}"] = Branch("g", (f"L{i - 1}",) if i % 3 else (f"L{i - 1}", "b"))
    for i in range(levels):
        left = (i % 2 == 0) != mirrored
        p[f"H{i}"] = Hole("f", (f"L{i}",), ()) if left else Hole("f", (), (f"L{i}",))
    p["C0"] = p["H0"]
    for i in range(1, levels):
        p[f"K{i}"] = Compose(f"H{i}", f"C{i - 1}")
        p[f"C{i}"] = Compose(f"C{i - 1}", f"K{i}")
    p["S"] = Apply(f"C{levels - 1}", "b")
    return NormalGrammar(p, "S")


def qbf_templates() -> list[str]:
    def lit(v: str, pos: bool) -> str:
        return v if pos else "!" + v

    out = []
    signs = (True, False)
    for q in "AE":
        out += [f"{q} x. {lit('x', s)}" for s in signs]
        for s1, s2, op in itertools.product(signs, signs, "&|"):
            out.append(f"{q} x. {lit('x', s1)} {op} {lit('x', s2)}")
    for q1, q2 in itertools.product("AE", repeat=2):
        for s1, s2, op in itertools.product(signs, signs, "&|"):
            out.append(f"{q1} x. {q2} y. {lit('x', s1)} {op} {lit('y', s2)}")
    for qs in itertools.product("AE", repeat=3):
        for ss in itertools.product(signs, repeat=3):
            for o1, o2 in (("&", "|"), ("|", "&")):
                m = f"({lit('x', ss[0])} {o1} {lit('y', ss[1])}) {o2} {lit('z', ss[2])}"
                out.append(f"{qs[0]} x. {qs[1]} y. {qs[2]} z. {m}")
    return out


# ---------------------------------------------------------------------------


def test_criterion_1_canonization_oracle(report):
    t0 = time.perf_counter()
    rng = random.Random(1)
    bad_trees = 0
    for _ in range(10**4):
        t = random_tree(rng, rng.randint(1, 40))
        if canonize(prepare(tree_to_dag(t))).eval() != ahu_canon(ranked_tree(t)):
            bad_trees += 1
    grammars = corpus(200, 10**4)
    bad_grammars = sum(canonize(prepare(g)).eval() != ahu_canon(ranked_tree(g.eval())) for g in grammars)
    elapsed = time.perf_counter() - t0
    ok = bad_trees == 0 and bad_grammars == 0 and elapsed <= 300
    report(1, ok, f"10000 trees ({bad_trees} mismatches), 200 grammars ({bad_grammars} mismatches), "
                  f"{elapsed:.1f}s (limit 300s)")
    assert ok


def test_criterion_2_iso_rooted(report):
    gs = iso_corpus()
    canons = [ahu_canon(g.eval()) for g in gs]
    pairs = agree = positives = 0
    for i, j in itertools.combinations_with_replacement(range(len(gs)), 2):
        want = canons[i] == canons[j]
        pairs += 1
        positives += want
        agree += iso_rooted(gs[i], gs[j]) == want
    ok = agree == pairs
    report(2, ok, f"{agree}/{pairs} pairs agree with the canon-string oracle ({positives} isomorphic)")
    assert ok


def test_criterion_3_slp_primitives(report):
    rng = random.Random(3)
    slices = bad_slices = 0
    for _ in range(100):
        store = SlpStore()
        s = random_slp(rng, store, 200, exact=True)
        text = s.to_list()
        for l in range(1, len(text) + 1):
            for r in range(l, len(text) + 1):
                slices += 1
                bad_slices += slp_slice(s, l, r).to_list() != text[l - 1:r]
    store = SlpStore()
    pool = [random_slp(rng, store, rng.choice([8, 20, 60, 200])) for _ in range(400)]
    prefix_search = EqualityPolicy(exact_threshold=0, scan_threshold=0)
    bad_cmp = 0
    for k in range(10**4):
        a, b = rng.choice(pool), rng.choice(pool)
        if rng.random() < 0.3 and b.length >= 2:
            # same length, so the order is decided by content
            a = slp_slice(b, 1, b.length) if rng.random() < 0.5 else a
        policy = prefix_search if k % 2 else EqualityPolicy()
        bad_cmp += slp_compare_llex(a, b, DEFAULT_ORDER, policy) != explicit_llex(a.to_list(), b.to_list())
    ok = bad_slices == 0 and bad_cmp == 0
    report(3, ok, f"{slices} slices ({bad_slices} mismatches), 10000 llex comparisons ({bad_cmp} mismatches)")
    assert ok


def test_criterion_4_center_and_reroot(report):
    bad_center = bad_reroot = 0
    grammars = corpus(500, 5000)
    for g in grammars:
        e = normalize(even_grammar(g.to_grammar()))
        t = e.eval()
        if t.size > 10**4:
            continue
        p = find_center(e)
        u = address_tuple(resolve_path(e, p)[0])
        want = naive_center(t)
        if u != want:
            bad_center += 1
            continue
        bad_reroot += ahu_canon(reroot(e, p).eval()) != ahu_canon(naive_reroot(t, want))
    ok = bad_center == 0 and bad_reroot == 0
    report(4, ok, f"{len(grammars)} even grammars: {bad_center} center and {bad_reroot} reroot mismatches")
    assert ok


def test_criterion_5_bisimulation(report):
    gs = iso_corpus()
    trees = [unranked_tree(g.eval()) for g in gs]
    pairs = agree = positives = 0
    for i, j in itertools.combinations_with_replacement(range(len(gs)), 2):
        want = naive_bisim(trees[i], trees[j])
        pairs += 1
        positives += want
        agree += bisim_equal(gs[i], gs[j]) == want
    # bcanon output is ranked and in canonical sibling order, so compare exactly
    canon_bad = sum(
        bcanon_grammar(prepare(g)).eval() != ahu_canon(ranked_tree(naive_bcanon(t))) for g, t in zip(gs, trees)
    )
    ok = agree == pairs and canon_bad == 0
    report(5, ok, f"{agree}/{pairs} pairs agree with partition refinement ({positives} bisimilar); "
                  f"{canon_bad} bcanon mismatches over {len(gs)} grammars")
    assert ok


def test_criterion_6_qbf_reduction(report):
    t0 = time.perf_counter()
    formulas = qbf_templates()
    rng = random.Random(6)
    formulas += [random_qbf(rng, 8) for _ in range(300)]
    agree = true_count = 0
    for text in formulas:
        f = qbf_parse(text)
        truth = qbf_eval(f)
        true_count += truth
        agree += iso_st(*qbf_to_st(f)) == truth
    elapsed = time.perf_counter() - t0
    ok = agree == len(formulas) and elapsed <= 600
    report(6, ok, f"{agree}/{len(formulas)} formulas agree ({len(formulas) - 300} template, 300 random, "
                  f"{true_count} true), {elapsed:.1f}s (limit 600s)")
    assert ok


def test_criterion_7_copy_family_counts(report):
    sizes = [size_of(copy_family(n)) for n in range(5)]
    dag_sizes = [size_of(st_to_dag(copy_family(n))) for n in range(5)]
    closed = [2 ** (2**n + 1) - 1 for n in range(5)]
    ok = sizes == closed == dag_sizes and {3, 31, 511, 131071} <= set(sizes)
    report(7, ok, f"size_of n=0..4: {sizes}; st_to_dag: {dag_sizes}; closed form {closed}")
    assert ok


def test_criterion_8_scale(report):
    g = caterpillar()
    s = stats(g)[g.start]
    timings = {}
    t = time.perf_counter()
    c = canonize(prepare(g))
    timings["canonize"] = time.perf_counter() - t
    e = normalize(even_grammar(g.to_grammar()))
    t = time.perf_counter()
    p = find_center(e)
    timings["find_center"] = time.perf_counter() - t
    depth = resolve_path(e, p)[1]
    t = time.perf_counter()
    same = bisim_equal(g, caterpillar(mirrored=True))
    differ = bisim_equal(g, caterpillar(leaf="c"))
    timings["bisim_equal"] = (time.perf_counter() - t) / 2
    ok = (
        all(v < 10 for v in timings.values())
        and same
        and not differ
        and stats(c)[c.start].size == s.size
        and 2**59 <= s.size <= 2**61
        and 150 <= len(g.prods) <= 250
    )
    times = ", ".join(f"{k} {v:.2f}s" for k, v in timings.items())
    report(8, ok, f"{len(g.prods)} productions, size {s.size}, height {s.height}, diameter {s.diameter}, "
                  f"center depth {depth}; {times} (limit 10s each)")
    assert ok


def test_criterion_9_polynomial_growth(report):
    rows = []
    for g in corpus(500, 10**4):
        rows.append((g.size, canonize(prepare(g)).size))
    worst = max(c / s for s, c in rows)
    gate = all(c <= 50 * s * s for s, c in rows)
    slope, _ = statistics.linear_regression([math.log(s) for s, _ in rows], [math.log(c) for _, c in rows])
    report(9, gate, f"max |canon|/|g| = {worst:.2f}, log-log slope {slope:.2f} over {len(rows)} grammars; "
                    f"empirical gate |canon| <= 50|g|^2 {'holds' if gate else 'violated'}")
    assert gate


def test_criterion_10_fingerprint_robustness(report):
    strings = []
    for g in corpus(60, 10**4):
        r = ranked_normal(g)
        strings.append(DflrSlps(r).slp(r.start))
        d = DflrSlps(canonize(prepare(g)))
        strings += [d.slp(n) for n in d.tree]
    strings = [s for s in strings if s.length <= 10**4]
    truth = {}
    for i, j in itertools.combinations(range(len(strings)), 2):
        a, b = strings[i], strings[j]
        if a.length == b.length:
            truth[i, j] = a.to_list() == b.to_list()
    disagreements = 0
    for seed in range(1, 101):
        policy = EqualityPolicy(prime_count=3, seed=seed, exact_threshold=0)
        for (i, j), want in truth.items():
            disagreements += slp_equal(strings[i], strings[j], policy) != want
    equal = sum(truth.values())
    ok = disagreements == 0
    report(10, ok, f"{len(truth)} equal-length pairs ({equal} equal) x 100 seeds: {disagreements} disagreements")
    assert ok
