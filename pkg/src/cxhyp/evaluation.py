"""Distance-based ranking protocol and MAP / MRR / Hits@N.

For a node ``z`` with ground-truth neighbours ``NE_z`` the candidate pool is
every node except ``z`` and the nodes joined to ``z`` by a known edge that is
not being evaluated (training edges in link prediction, the other graph edges
in reconstruction).  Ties count against the model.

Two numbers are kept per neighbour ``w``:

* ``position``: 1 + pool members other than ``w`` at distance <= d(z, w).
  This is the size of the smallest closest-first prefix holding ``w`` and
  drives MAP.
* ``rank``: the same count with the other neighbours of ``z`` removed when
  ``filtered`` is set (reconstruction default), else equal to ``position``.
  MRR and Hits@N use it.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .graphs import Graph

RECONSTRUCTION = "reconstruction"
LINK_PREDICTION = "link_prediction"
DEFAULT_HITS = (1, 3, 10)
DEFAULT_BUCKETS = ((1, 1), (2, 5), (6, 10), (11, 20), (21, None))


@dataclass
class RankingTask:
    mode: str
    graph: Graph
    eval_edges: np.ndarray | None = None
    train_edges: np.ndarray | None = None
    filtered: bool = True

    def __post_init__(self):
        if self.mode == "link":
            self.mode = LINK_PREDICTION
        if self.mode not in (RECONSTRUCTION, LINK_PREDICTION):
            raise ValueError(f"unknown ranking mode {self.mode!r}")
        if self.eval_edges is None:
            if self.mode == LINK_PREDICTION:
                raise ValueError("link prediction needs eval_edges")
            self.eval_edges = self.graph.pairs()
        self.eval_edges = np.asarray(self.eval_edges, dtype=np.int64).reshape(-1, 2)
        if self.mode == LINK_PREDICTION:
            if self.train_edges is None:
                raise ValueError("link prediction needs train_edges")
            self.train_edges = np.asarray(self.train_edges, dtype=np.int64).reshape(-1, 2)
            train = set(map(tuple, self.train_edges.tolist()))
            if any(e in train for e in map(tuple, self.eval_edges.tolist())):
                raise ValueError("eval edges overlap training edges")
            known = self.train_edges
        else:
            known = self.graph.edges
        m = self.graph.num_nodes
        self._known: list[set[int]] = [set() for _ in range(m)]
        for u, v in known.tolist():
            self._known[u].add(v)
            self._known[v].add(u)
        self._truth: dict[int, list[int]] = {}
        for z, w in self.eval_edges.tolist():
            self._truth.setdefault(z, []).append(w)

    @property
    def nodes(self) -> list[int]:
        return sorted(self._truth)

    def truth(self, z: int) -> list[int]:
        return sorted(set(self._truth.get(z, [])))

    def pool_mask(self, z: int) -> np.ndarray:
        truth = self.truth(z)
        mask = np.ones(self.graph.num_nodes, dtype=bool)
        mask[z] = False
        blocked = self._known[z].difference(truth)
        if blocked:
            mask[list(blocked)] = False
        return mask


class NeighborRanks(NamedTuple):
    neighbors: np.ndarray
    ranks: np.ndarray
    positions: np.ndarray


def _ranks_from_distances(dist, mask, truth, filtered):
    truth = np.asarray(truth, dtype=np.int64)
    dt = dist[truth]
    pool = np.sort(dist[mask])
    # pool members at <= d(z, w), minus w itself
    positions = np.searchsorted(pool, dt, side="right")
    if filtered:
        others = np.sort(dt)
        ranks = positions - np.searchsorted(others, dt, side="right") + 1
    else:
        ranks = positions.copy()
    return NeighborRanks(truth, ranks, positions)


def rank_neighbors(table, task: RankingTask, z: int) -> NeighborRanks:
    if not 0 <= z < task.graph.num_nodes:
        raise IndexError(f"unknown node {z}")
    truth = task.truth(z)
    if not truth:
        raise ValueError(f"node {z} has no evaluation neighbours")
    dist = table.space.distances(table.points[z], table.points)
    return _ranks_from_distances(dist, task.pool_mask(z), truth, task.filtered and task.mode == RECONSTRUCTION)


def average_precision(positions) -> float:
    pos = np.sort(np.asarray(positions))
    hits = np.searchsorted(pos, pos, side="right")
    return float(np.mean(hits / pos))


def map_score(all_positions: Sequence[Sequence[int]]) -> float:
    """Mean over nodes of the mean precision of the smallest prefix holding each neighbour."""
    return float(np.mean([average_precision(p) for p in all_positions]))


def mrr_score(all_ranks: Sequence[Sequence[int]]) -> float:
    return float(np.mean([np.mean(1.0 / np.asarray(r, dtype=float)) for r in all_ranks]))


def hits_at_n(all_ranks: Sequence[Sequence[int]], n: int) -> float:
    if n < 1:
        raise ValueError("N must be >= 1")
    return float(np.mean([np.min(r) <= n for r in all_ranks]))


@dataclass
class EvalReport:
    map: float
    mrr: float
    hits: dict[int, float]
    counts: dict[str, int]
    per_bucket: dict[str, "EvalReport"] | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "map": self.map,
            "mrr": self.mrr,
            "hits": {str(k): v for k, v in sorted(self.hits.items())},
            "buckets": None
            if self.per_bucket is None
            else {k: (None if r is None else r.to_dict()) for k, r in self.per_bucket.items()},
            "counts": dict(self.counts),
        }
        out.update(self.extra)
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _collect(table, task, nodes, workers):
    def one(z):
        return rank_neighbors(table, task, z)

    if workers > 1 and len(nodes) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, nodes))
    return [one(z) for z in nodes]


def _report(results, hits, n_nodes_total):
    ranks = [r.ranks for r in results]
    return EvalReport(
        map=map_score([r.positions for r in results]),
        mrr=mrr_score(ranks),
        hits={n: hits_at_n(ranks, n) for n in hits},
        counts={
            "nodes": len(results),
            "edges": int(sum(len(r.neighbors) for r in results)),
            "graph_nodes": n_nodes_total,
        },
    )


def evaluate(table, task: RankingTask, hits: Sequence[int] = DEFAULT_HITS, workers: int = 1) -> EvalReport:
    nodes = task.nodes
    if not nodes:
        raise ValueError("no evaluation edges")
    return _report(_collect(table, task, nodes, workers), sorted(set(hits)), task.graph.num_nodes)


def bucket_label(lo: int, hi: int | None) -> str:
    if hi is None:
        return f">{lo - 1}"
    return str(lo) if lo == hi else f"{lo}-{hi}"


def parse_buckets(spec: str):
    """Parse ``"1,2-5,6-10,11-20,20+"``; ``N+`` means more than ``N``."""
    out = []
    for part in spec.split(","):
        part = part.strip()
        if part.endswith("+"):
            out.append((int(part[:-1]) + 1, None))
        elif "-" in part:
            lo, hi = part.split("-")
            out.append((int(lo), int(hi)))
        else:
            out.append((int(part), int(part)))
    for lo, hi in out:
        if lo < 1 or (hi is not None and hi < lo):
            raise ValueError(f"bad bucket in {spec!r}")
    return tuple(out)


def bucketed_1n_report(
    table,
    task: RankingTask,
    buckets=DEFAULT_BUCKETS,
    base_graph: Graph | None = None,
    hits: Sequence[int] = DEFAULT_HITS,
    workers: int = 1,
) -> EvalReport:
    """Overall report plus per-bucket reports keyed by the child's parent count.

    Parent counts come from ``base_graph`` (the graph before transitive
    closure), defaulting to the task graph.  Empty buckets map to ``None``.
    """
    base = base_graph if base_graph is not None else task.graph
    parents = base.out_degree()
    hits = sorted(set(hits))
    nodes = task.nodes
    results = dict(zip(nodes, _collect(table, task, nodes, workers)))
    report = _report(list(results.values()), hits, task.graph.num_nodes)
    per = {}
    for lo, hi in buckets:
        sel = [results[z] for z in nodes if parents[z] >= lo and (hi is None or parents[z] <= hi)]
        per[bucket_label(lo, hi)] = _report(sel, hits, task.graph.num_nodes) if sel else None
    report.per_bucket = per
    return report
