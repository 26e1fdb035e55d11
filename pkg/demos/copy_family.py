"""Doubly exponential compression: a grammar with n+2 rules whose tree has 2^(2^n+1)-1 nodes."""

from treegram import copy_family, format_grammar, height_of, size_of, st_to_dag

print(format_grammar(copy_family(3)))
for n in range(8):
    g = copy_family(n)
    line = f"n={n}: {len(g.rules)} rules, size {size_of(g)}, height {height_of(g)}"
    if n <= 4:
        dag = st_to_dag(g)
        line += f", dag with {len(dag.rules)} rules"
    print(line)

# the exact count stays available far beyond anything that could be decompressed
print("n=20 size has", size_of(copy_family(20)).bit_length(), "bits")
