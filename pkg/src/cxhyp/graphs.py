"""Graph containers, generators, splitting and Gromov delta-hyperbolicity."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

EXACT_DELTA_NODE_CAP = 1500


class GraphError(ValueError):
    pass


class CycleError(GraphError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("graph has a cycle: " + " -> ".join(map(str, self.cycle)))


@dataclass(eq=False)
class Graph:
    """Node vocabulary plus an edge set.

    Directed edges run child -> parent.  Undirected graphs store each edge
    once as ``(u, v)`` with ``u < v``.
    """

    tokens: list[str]
    edges: np.ndarray
    directed: bool = True

    def __post_init__(self):
        self.tokens = [str(t) for t in self.tokens]
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        m = len(self.tokens)
        if e.size and (e.min() < 0 or e.max() >= m):
            raise GraphError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            u = int(e[e[:, 0] == e[:, 1]][0, 0])
            raise GraphError(f"self-loop on node {self.tokens[u]!r}")
        if not self.directed:
            e = np.sort(e, axis=1)
        if e.size:
            e = np.unique(e, axis=0)
        self.edges = e
        self.edges.setflags(write=False)

    @classmethod
    def from_edges(cls, edges, num_nodes: int | None = None, directed: bool = True):
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if num_nodes is None:
            num_nodes = int(e.max()) + 1 if e.size else 0
        return cls([str(i) for i in range(num_nodes)], e, directed)

    @property
    def num_nodes(self) -> int:
        return len(self.tokens)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(map(tuple, self.edges.tolist()))

    def pairs(self) -> np.ndarray:
        """Ordered (source, target) pairs: the edges, plus reversals if undirected."""
        if self.directed:
            return self.edges
        return np.concatenate([self.edges, self.edges[:, ::-1]])

    @cached_property
    def neighbors(self) -> list[set[int]]:
        """Undirected adjacency: nodes joined to each node by an edge in either direction."""
        nbrs: list[set[int]] = [set() for _ in range(self.num_nodes)]
        for u, v in self.edges.tolist():
            nbrs[u].add(v)
            nbrs[v].add(u)
        return nbrs

    def out_degree(self) -> np.ndarray:
        return np.bincount(self.edges[:, 0], minlength=self.num_nodes) if self.num_edges else np.zeros(self.num_nodes, int)

    def with_edges(self, edges) -> "Graph":
        return Graph(self.tokens, edges, self.directed)

    def to_undirected(self) -> "Graph":
        return Graph(self.tokens, self.edges, directed=False)


def load_edge_list(path, directed: bool = True) -> Graph:
    """Read a two-column TSV edge list; tokens are interned in first-appearance order."""
    index: dict[str, int] = {}
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise GraphError(f"{path}:{lineno}: expected two tab-separated tokens")
            u, v = parts
            if u == v:
                raise GraphError(f"{path}:{lineno}: self-loop on {u!r}")
            edges.append((index.setdefault(u, len(index)), index.setdefault(v, len(index))))
    return Graph(list(index), np.array(edges, dtype=np.int64).reshape(-1, 2), directed)


def write_edge_list(graph: Graph, path) -> None:
    tok = graph.tokens
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for u, v in graph.edges.tolist():
            fh.write(f"{tok[u]}\t{tok[v]}\n")


def _find_cycle(succ: list[list[int]]) -> list[int]:
    color = [0] * len(succ)
    for root in range(len(succ)):
        if color[root]:
            continue
        stack = [(root, iter(succ[root]))]
        path = [root]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
                path.pop()
            elif color[nxt] == 1:
                return path[path.index(nxt):] + [nxt]
            elif color[nxt] == 0:
                color[nxt] = 1
                stack.append((nxt, iter(succ[nxt])))
                path.append(nxt)
    return []


def topological_order(graph: Graph) -> list[int]:
    m = graph.num_nodes
    succ: list[list[int]] = [[] for _ in range(m)]
    indeg = [0] * m
    for u, v in graph.edges.tolist():
        succ[u].append(v)
        indeg[v] += 1
    order = [u for u in range(m) if indeg[u] == 0]
    for u in order:
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                order.append(v)
    if len(order) < m:
        cycle = _find_cycle(succ)
        raise CycleError([graph.tokens[i] for i in cycle])
    return order


def transitive_closure(graph: Graph) -> Graph:
    if not graph.directed:
        raise GraphError("transitive closure needs a directed graph")
    order = topological_order(graph)
    succ: list[list[int]] = [[] for _ in range(graph.num_nodes)]
    for u, v in graph.edges.tolist():
        succ[u].append(v)
    reach: list[set[int]] = [set() for _ in range(graph.num_nodes)]
    for u in reversed(order):
        r = reach[u]
        for v in succ[u]:
            r.add(v)
            r |= reach[v]
    edges = [(u, v) for u in range(graph.num_nodes) for v in reach[u]]
    return graph.with_edges(np.array(edges, dtype=np.int64).reshape(-1, 2))


def balanced_tree(r: int, h: int) -> Graph:
    """Balanced tree of branching ``r`` and depth ``h``; node 0 is the root, edges child -> parent."""
    if r < 2 or h < 1:
        raise GraphError("balanced tree needs r >= 2 and h >= 1")
    m = sum(r**i for i in range(h + 1))
    child = np.arange(1, m)
    edges = np.stack([child, (child - 1) // r], axis=1)
    return Graph([str(i) for i in range(m)], edges)


def prufer_to_edges(seq) -> list[tuple[int, int]]:
    """Decode a Prüfer sequence of length ``m - 2`` into the ``m - 1`` tree edges."""
    seq = list(seq)
    m = len(seq) + 2
    degree = [1] * m
    for x in seq:
        degree[x] += 1
    leaves = [i for i in range(m) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    edges.append((heapq.heappop(leaves), heapq.heappop(leaves)))
    return edges


def random_tree_edges(m: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    if m == 2:
        return [(0, 1)]
    return prufer_to_edges(rng.integers(0, m, size=m - 2).tolist())


def compressed_graph(m: int, k: int, seed: int = 0) -> Graph:
    """Union of ``k`` uniform random labelled trees on ``m`` shared nodes (undirected)."""
    if m < 2 or k < 1:
        raise GraphError("compressed graph needs m >= 2 and k >= 1")
    rng = np.random.default_rng(seed)
    edges = [e for _ in range(k) for e in random_tree_edges(m, rng)]
    return Graph([str(i) for i in range(m)], np.array(edges), directed=False)


def random_taxonomy(m: int, extra_parent_prob: float = 0.15, max_parents: int = 8, seed: int = 0) -> Graph:
    """Random DAG taxonomy (child -> parent) where some children have several parents.

    Node 0 is the root.  Every other node picks a primary parent among the
    earlier nodes, biased toward recent ones, and with probability
    ``extra_parent_prob`` per extra slot adds more parents.
    """
    rng = np.random.default_rng(seed)
    edges = []
    for child in range(1, m):
        parents = {int(rng.integers(max(0, child // 2 - 1), child))}
        while len(parents) < min(max_parents, child) and rng.random() < extra_parent_prob:
            parents.add(int(rng.integers(0, child)))
        edges.extend((child, p) for p in parents)
    return Graph([f"n{i}" for i in range(m)], np.array(edges).reshape(-1, 2))


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.90
    valid_frac: float = 0.05
    test_frac: float = 0.05
    seed: int = 0
    max_retries: int = 20

    def __post_init__(self):
        fr = (self.train_frac, self.valid_frac, self.test_frac)
        if any(f < 0 for f in fr) or self.train_frac <= 0 or abs(sum(fr) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must be nonnegative, train positive, summing to 1: {fr}")


def split_edges(graph: Graph, spec: SplitSpec = SplitSpec()):
    """Random train/valid/test split of the edges.

    Held-out edges are only taken while both endpoints keep at least one
    training edge, so every valid/test node is seen in training.
    """
    edges = graph.edges
    n = len(edges)
    n_valid = int(round(spec.valid_frac * n))
    n_test = int(round(spec.test_frac * n))
    n_out = n_valid + n_test
    rng = np.random.default_rng(spec.seed)
    for _ in range(spec.max_retries):
        order = rng.permutation(n)
        degree = np.bincount(edges.ravel(), minlength=graph.num_nodes)
        held = []
        for i in order.tolist():
            if len(held) == n_out:
                break
            u, v = edges[i]
            if degree[u] > 1 and degree[v] > 1:
                degree[u] -= 1
                degree[v] -= 1
                held.append(i)
        if len(held) == n_out:
            held = np.asarray(held, dtype=np.int64)
            mask = np.ones(n, dtype=bool)
            mask[held] = False
            train = edges[mask]
            valid = edges[np.sort(held[:n_valid])]
            test = edges[np.sort(held[n_valid:])]
            return train, valid, test
    raise GraphError(
        f"could not hold out {n_out} edges while keeping every held-out node in training; "
        "use smaller valid/test fractions"
    )


def hop_distances(graph: Graph) -> np.ndarray:
    """All-pairs unweighted shortest paths on the undirected view (inf if unreachable)."""
    m = graph.num_nodes
    e = graph.edges
    adj = csr_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(m, m))
    return shortest_path(adj, directed=False, unweighted=True)


def _hyp(d, a, b, c, dd):
    s1 = d[a, b] + d[c, dd]
    s2 = d[a, c] + d[b, dd]
    s3 = d[a, dd] + d[b, c]
    s = np.sort(np.stack([s1, s2, s3]), axis=0)
    return s[2] - s[1]


def delta_hyperbolicity(
    graph: Graph,
    mode: str = "exact",
    samples: int = 100_000,
    seed: int = 0,
    node_cap: int = EXACT_DELTA_NODE_CAP,
) -> float:
    """Gromov four-point delta: half the largest gap between the two largest pair sums.

    ``exact`` scans every 4-tuple (cost grows as m^4); ``sampled`` draws random
    4-tuples and returns a lower bound.
    """
    m = graph.num_nodes
    if mode == "exact":
        if m > node_cap:
            raise GraphError(
                f"exact delta refused for {m} nodes (cap {node_cap}); use sampled mode"
            )
        d = hop_distances(graph)
        if not np.all(np.isfinite(d)):
            raise GraphError("exact delta needs a connected graph; use sampled mode")
        best = 0.0
        for a, b in itertools.combinations(range(m), 2):
            # (c, dd) over the full grid; symmetric duplicates are harmless
            s1 = d[a, b] + d
            s2 = d[a][:, None] + d[b][None, :]
            s3 = d[b][:, None] + d[a][None, :]
            hi = np.maximum(np.maximum(s1, s2), s3)
            lo = np.minimum(np.minimum(s1, s2), s3)
            mid = s1 + s2 + s3 - hi - lo
            best = max(best, float((hi - mid).max()))
        return best / 2.0
    if mode == "sampled":
        if m < 4:
            return 0.0
        d = hop_distances(graph)
        rng = np.random.default_rng(seed)
        best = 0.0
        remaining = samples
        tries = 0
        while remaining > 0 and tries < 50:
            tries += 1
            q = rng.integers(0, m, size=(min(remaining, 200_000), 4))
            with np.errstate(invalid="ignore"):  # inf - inf across components
                h = _hyp(d, q[:, 0], q[:, 1], q[:, 2], q[:, 3])
            h = h[np.isfinite(h)]
            remaining -= len(h)
            if len(h):
                best = max(best, float(h.max()))
        return best / 2.0
    raise ValueError(f"unknown delta mode {mode!r}")
