"""
Unions of random trees
======================

Overlay k random spanning trees on the same nodes, measure how tree-like
the union still is, and compare the complex ball against a real Poincare
ball with the same number of real parameters.
"""

from cxhyp import RankingTask, TrainConfig, compressed_graph, delta_hyperbolicity, evaluate, train

for k in (1, 2, 3):
    g = compressed_graph(200, k, seed=0)
    print(f"k={k}: {g.num_edges} edges, delta={delta_hyperbolicity(g)}")

g = compressed_graph(200, 2, seed=0)
config = TrainConfig(dim=8, epochs=300, seed=0)
for model in ("unitball", "poincare"):
    table, _ = train(g, config, model=model)
    r = evaluate(table, RankingTask("reconstruction", g))
    print(f"{model:<9} MAP {r.map:.4f}  Hits@3 {r.hits[3]:.4f}")
