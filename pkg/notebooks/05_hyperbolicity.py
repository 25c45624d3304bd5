"""
Gromov delta
============

Four-point delta on small graphs: zero for trees, positive once cycles
appear. Larger graphs fall back to a sampled lower bound.
"""

from cxhyp import Graph, balanced_tree, compressed_graph, delta_hyperbolicity

cycle = Graph(list("abcd"), [(0, 1), (1, 2), (2, 3), (3, 0)])
print("C4             ", delta_hyperbolicity(cycle))
print("tree(3, 3)     ", delta_hyperbolicity(balanced_tree(3, 3)))

for k in (1, 2, 4, 8):
    g = compressed_graph(80, k, seed=1)
    print(f"union of {k} trees", delta_hyperbolicity(g))

big = compressed_graph(3000, 3, seed=0)
# exact mode scans every 4-tuple, so it is meant for small graphs
print("3000 nodes, sampled:", delta_hyperbolicity(big, "sampled", samples=20000, seed=0))
