"""
Link prediction on a taxonomy
=============================

A random multi-parent taxonomy is closed transitively, split 90/5/5 and
embedded from the training part only. Held-out edges are then ranked, with
results broken down by how many parents the child has.
"""

from cxhyp import RankingTask, SplitSpec, TrainConfig, bucketed_1n_report, split_edges, train, transitive_closure
from cxhyp.graphs import random_taxonomy

base = random_taxonomy(62, extra_parent_prob=0.7, max_parents=12, seed=0)
closed = transitive_closure(base)
print(base.num_edges, "base edges ->", closed.num_edges, "after closure")

train_edges, valid_edges, test_edges = split_edges(closed, SplitSpec(seed=0))
print("split:", len(train_edges), len(valid_edges), len(test_edges))

table, _ = train(closed.with_edges(train_edges), TrainConfig(dim=10, seed=0))

known = [tuple(e) for part in (train_edges, valid_edges) for e in part.tolist()]
task = RankingTask("link", closed, eval_edges=[tuple(e) for e in test_edges.tolist()], train_edges=known)
report = bucketed_1n_report(table, task, base_graph=base)
print(f"overall MAP {report.map:.3f}  Hits@10 {report.hits[10]:.3f}")
for label, sub in report.per_bucket.items():
    if sub is None:
        print(f"  {label:>6}: no edges")
    else:
        print(f"  {label:>6}: {sub.counts['edges']:3d} edges  MAP {sub.map:.3f}")
