"""
Embedding a balanced tree
=========================

Train on a branching-10 tree of height 2 and watch the reconstruction
metrics climb while the points drift outwards.
"""

import numpy as np

from cxhyp import RankingTask, TrainConfig, balanced_tree, evaluate, train

tree = balanced_tree(10, 2)
print(tree.num_nodes, "nodes,", tree.num_edges, "edges")

history = []
table, losses = train(tree, TrainConfig(dim=10, epochs=200, seed=0), on_epoch=lambda e, loss, lr: history.append(loss))
print("loss: first", round(history[0], 4), "last", round(history[-1], 4))

report = evaluate(table, RankingTask("reconstruction", tree))
print(f"MAP {report.map:.4f}  MRR {report.mrr:.4f}  Hits@1 {report.hits[1]:.4f}")

# depth shows up as radius: root near the centre, leaves further out
radius = np.linalg.norm(table.points, axis=1)
print("root radius ", radius[0].round(3))
print("level 1 mean", radius[1:11].mean().round(3))
print("leaves mean ", radius[11:].mean().round(3))
