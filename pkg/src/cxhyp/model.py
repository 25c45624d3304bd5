"""Embedding tables, the soft ranking loss and projected Riemannian SGD."""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import geometry
from .geometry import CONFORMAL, METRIC_MODES, QUADRATIC_FORM
from .gradients import SINGULAR_EPS, batch_distance_partials
from .graphs import Graph

log = logging.getLogger(__name__)

INIT_RANGE = 1e-3


class CheckpointError(ValueError):
    pass


class UnitBall:
    """Complex unit ball; points are complex arrays of shape ``(m, n)``."""

    name = "unitball"
    header = "cxhyp-v1"
    dtype = np.complex128
    metric_modes = METRIC_MODES

    def init(self, m: int, n: int, rng: np.random.Generator) -> np.ndarray:
        raw = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(m, 2 * n))
        return raw[:, :n] + 1j * raw[:, n:]

    def distances(self, u, points):
        return geometry.distances(u, points)

    def pairwise_distances(self, points):
        return geometry.pairwise_distances(points)

    def grads(self, u, others):
        """Gradients of ``d(u, others_k)`` w.r.t. ``u`` and w.r.t. each ``others_k``, plus distances."""
        g_u, dist = batch_distance_partials(u[None, :], others, SINGULAR_EPS)
        g_v, _ = batch_distance_partials(others, u[None, :], SINGULAR_EPS)
        return g_u, g_v, dist

    def rescale(self, points, grads, mode):
        r2 = np.sum(points.real**2 + points.imag**2, axis=1)
        if mode == CONFORMAL:
            return grads * ((1.0 - r2) ** 2 / 4.0)[:, None]
        if mode == QUADRATIC_FORM:
            s = 1.0 - r2
            gg = np.sum(grads.real**2 + grads.imag**2, axis=1)
            gz = np.abs(np.sum(grads * np.conj(points), axis=1)) ** 2
            # Bergman form on the unit vector along each gradient
            q = 4.0 * (s * gg + gz) / (s**2 * np.where(gg > 0, gg, 1.0))
            return grads / q[:, None]
        raise ValueError(f"unknown metric mode {mode!r}")

    def to_row(self, point):
        return np.concatenate([point.real, point.imag])

    def row_width(self, n: int) -> int:
        return 2 * n

    def from_rows(self, rows):
        n = rows.shape[1] // 2
        return rows[:, :n] + 1j * rows[:, n:]


UNIT_BALL = UnitBall()


def get_space(name: str):
    if name == UNIT_BALL.name:
        return UNIT_BALL
    if name == "poincare":
        from .poincare import POINCARE_BALL

        return POINCARE_BALL
    raise ValueError(f"unknown model {name!r}")


@dataclass
class EmbeddingTable:
    points: np.ndarray
    model: str = UNIT_BALL.name
    tokens: list[str] | None = None

    @property
    def num_nodes(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def space(self):
        return get_space(self.model)

    def norms_sq(self) -> np.ndarray:
        return np.sum(np.abs(self.points) ** 2, axis=1)

    def copy(self) -> "EmbeddingTable":
        return EmbeddingTable(self.points.copy(), self.model, None if self.tokens is None else list(self.tokens))


@dataclass
class TrainConfig:
    dim: int = 10
    epochs: int = 300
    lr: float = 0.5
    burnin_epochs: int = 10
    burnin_factor: float = 10.0
    negatives: int = 50
    eps_proj: float = 1e-5
    metric_mode: str = CONFORMAL
    seed: int = 0
    batch_size: int = 1
    include_positive_in_denominator: bool = True
    include_self_in_denominator: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.metric_mode == "quadratic":
            self.metric_mode = QUADRATIC_FORM
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if not 0 < self.eps_proj < 0.1:
            raise ValueError("eps_proj must lie in (0, 0.1)")
        if self.epochs < 1 or self.dim < 1 or self.batch_size < 1 or self.workers < 1:
            raise ValueError("epochs, dim, batch_size and workers must be >= 1")
        if self.burnin_factor <= 0:
            raise ValueError("burnin_factor must be positive")
        if self.metric_mode not in METRIC_MODES:
            raise ValueError(f"metric_mode must be one of {METRIC_MODES}")
        if not (self.include_positive_in_denominator or self.include_self_in_denominator):
            # a node with no non-neighbours would leave an empty denominator
            raise ValueError("the denominator needs the positive or the self term")

    def lr_at(self, epoch: int) -> float:
        return self.lr / self.burnin_factor if epoch < self.burnin_epochs else self.lr

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LossBatch:
    """One positive pair ``(p, q)`` with negatives drawn for ``p``.

    The self term ``p`` is implied by the loss flags, never listed in
    ``negative_ids``; any ``p`` found there is ignored.
    """

    p: int
    q: int
    negative_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))


def init_embeddings(m: int, n: int, seed: int = 0, model: str = UNIT_BALL.name) -> EmbeddingTable:
    if m < 1 or n < 1:
        raise ValueError("need m >= 1 and n >= 1")
    rng = np.random.default_rng(seed)
    return EmbeddingTable(get_space(model).init(m, n, rng), model)


def loss_distance_partials(denominator: Sequence[float]) -> np.ndarray:
    """Derivatives of the loss w.r.t. each softmax-denominator distance.

    ``denominator`` lists every member (a self term enters at distance 0).
    The coefficient on the positive distance ``d_pq`` is ``+1`` on top of
    these; when the positive is itself a member the two add.
    """
    d = np.asarray(denominator, dtype=np.float64)
    w = np.exp(-(d - d.min()))
    return -w / w.sum()


def _batch_terms(points, batch: LossBatch, include_positive: bool, include_self: bool, space):
    """Loss, node ids and summed Euclidean gradients for one batch."""
    p, q = batch.p, batch.q
    negs = np.asarray(batch.negative_ids, dtype=np.int64)
    negs = negs[negs != p]
    idx = np.concatenate(([q], negs))
    g_u, g_v, dist = space.grads(points[p], points[idx])
    e = np.exp(-dist)
    if not include_positive:
        e[0] = 0.0
    z = e.sum() + (1.0 if include_self else 0.0)
    coef = -e / z
    coef[0] += 1.0
    loss = dist[0] + math.log(z)
    nodes = np.concatenate(([p], idx))
    grads = np.concatenate(((coef[:, None] * g_u).sum(axis=0)[None, :], coef[:, None] * g_v))
    return loss, nodes, grads


def soft_ranking_loss(
    table: EmbeddingTable,
    batch: LossBatch,
    include_positive_in_denominator: bool = True,
    include_self_in_denominator: bool = False,
) -> float:
    """``d(p, q) + log(sum over the denominator of exp(-d(p, k)))``.

    The denominator holds the negatives, plus ``q`` and the self term ``p``
    (at distance 0) according to the two flags.
    """
    m = table.num_nodes
    ids = [batch.p, batch.q, *np.asarray(batch.negative_ids).tolist()]
    if any(not 0 <= int(i) < m for i in ids):
        raise IndexError(f"node id out of range for a table of {m} nodes")
    negs = np.asarray(batch.negative_ids, dtype=np.int64)
    negs = negs[negs != batch.p]
    d = table.space.distances(table.points[batch.p], table.points[np.concatenate(([batch.q], negs))])
    terms = list(d[1:])
    if include_positive_in_denominator:
        terms.append(d[0])
    if include_self_in_denominator:
        terms.append(0.0)
    if not terms:
        raise ValueError("empty softmax denominator")
    t = np.asarray(terms, dtype=np.float64)
    lo = t.min()
    return float(d[0] - lo + math.log(np.exp(-(t - lo)).sum()))


def project(z, eps: float = 1e-5):
    """Pull points with norm >= ``1 - eps`` back to norm ``1 - eps``; works row-wise on 2-d input.

    Clamping the whole shell ``[1 - eps, 1)`` as well keeps ``1 - |z|^2`` well
    away from rounding to zero.
    """
    z = np.asarray(z)
    if not np.all(np.isfinite(z)):
        raise ValueError("cannot project non-finite coordinates")
    if z.ndim == 1:
        return project(z[None, :], eps)[0]
    norm = np.sqrt(np.sum(np.abs(z) ** 2, axis=1))
    out = z.copy()
    big = norm >= 1.0 - eps
    if np.any(big):
        out[big] *= ((1.0 - eps) / norm[big])[:, None]
    return out


def rsgd_step(table: EmbeddingTable, batches, lr: float, config: TrainConfig) -> float:
    """Apply one projected RSGD update for ``batches`` in place; returns their summed loss."""
    if isinstance(batches, LossBatch):
        batches = [batches]
    return _step(table.points, batches, lr, config, table.space)


def _step(points, batches, lr, config, space) -> float:
    total = 0.0
    all_nodes, all_grads = [], []
    for b in batches:
        loss, nodes, grads = _batch_terms(
            points, b, config.include_positive_in_denominator, config.include_self_in_denominator, space
        )
        total += loss
        all_nodes.append(nodes)
        all_grads.append(grads)
    if lr == 0:
        return total
    nodes = np.concatenate(all_nodes)
    grads = np.concatenate(all_grads)
    uniq, inv = np.unique(nodes, return_inverse=True)
    summed = np.zeros((len(uniq), points.shape[1]), dtype=points.dtype)
    np.add.at(summed, inv, grads)
    current = points[uniq]
    step = space.rescale(current, summed, config.metric_mode)
    points[uniq] = project(current - lr * step, config.eps_proj)
    return total


class NegativeSampler:
    """Uniform sampling, with replacement, of nodes not adjacent to ``p`` (and not ``p``).

    When a node has no more than ``k`` non-neighbours, all of them are used once.
    """

    def __init__(self, neighbors: list[set[int]], k: int, rng: np.random.Generator):
        self.m = m = len(neighbors)
        self.k = k
        self.rng = rng
        self._blocked = [np.array(sorted(nb | {i}), dtype=np.int64) for i, nb in enumerate(neighbors)]
        self._keys = np.concatenate([i * m + b for i, b in enumerate(self._blocked)]) if m else np.zeros(0, np.int64)
        self._free = m - np.array([len(b) for b in self._blocked], dtype=np.int64)
        self._small: dict[int, np.ndarray] = {}

    def _complement(self, p: int) -> np.ndarray:
        if p not in self._small:
            mask = np.ones(self.m, dtype=bool)
            mask[self._blocked[p]] = False
            self._small[p] = np.flatnonzero(mask)
        return self._small[p]

    def sample(self, p: int) -> np.ndarray:
        if self._free[p] <= self.k:
            return self._complement(p)
        return self.sample_many(np.array([p]))[0]

    def sample_many(self, sources: np.ndarray) -> np.ndarray:
        """Negatives for each source as a ``(len(sources), k)`` array padded with ``-1``."""
        m, k = self.m, self.k
        sources = np.asarray(sources, dtype=np.int64)
        out = self.rng.integers(0, m, size=(len(sources), k))
        small = self._free[sources] <= k
        big_rows = np.flatnonzero(~small)
        todo = big_rows
        while len(todo):
            keys = sources[todo, None] * m + out[todo]
            pos = np.minimum(np.searchsorted(self._keys, keys), len(self._keys) - 1)
            bad = self._keys[pos] == keys
            rows = np.flatnonzero(bad.any(axis=1))
            if not len(rows):
                break
            r, c = np.nonzero(bad)
            out[todo[r], c] = self.rng.integers(0, m, size=len(r))
            todo = todo[rows]
        for row in np.flatnonzero(small).tolist():
            comp = self._complement(int(sources[row]))
            out[row, : len(comp)] = comp
            out[row, len(comp):] = -1
        return out


def _kernel_for(space):
    from . import _kernels

    return _kernels._unitball_pair if space.name == UNIT_BALL.name else _kernels._poincare_pair


def _run_epoch(points, rows, negs, lr, config, space, pair_fn) -> float:
    from . import _kernels

    mode = _kernels.MODE_QUADRATIC if config.metric_mode == QUADRATIC_FORM else _kernels.MODE_CONFORMAL
    acc = np.zeros_like(points)
    mark = np.zeros(points.shape[0], dtype=np.int64)
    return _kernels.run_epoch(
        pair_fn,
        points,
        np.ascontiguousarray(rows),
        np.ascontiguousarray(negs),
        float(lr),
        float(config.eps_proj),
        bool(config.include_positive_in_denominator),
        bool(config.include_self_in_denominator),
        mode,
        int(config.batch_size),
        acc,
        mark,
    )


def train(
    graph: Graph,
    config: TrainConfig | None = None,
    model: str = UNIT_BALL.name,
    on_epoch: Callable[[int, float, float], None] | None = None,
):
    """Projected RSGD on the soft ranking loss.

    Returns ``(table, losses)`` where ``losses[e]`` is the mean loss per
    positive pair in epoch ``e``.  Undirected graphs train on both
    orientations of every edge.  With ``workers > 1`` edge shards run in
    threads that write the shared table without locks, so results are not
    reproducible.
    """
    config = config or TrainConfig()
    if graph.num_edges == 0:
        raise ValueError("cannot train on a graph without edges")
    space = get_space(model)
    if config.metric_mode not in space.metric_modes:
        raise ValueError(f"{model} does not support metric mode {config.metric_mode!r}")
    rng = np.random.default_rng(config.seed)
    table = EmbeddingTable(space.init(graph.num_nodes, config.dim, rng), model, list(graph.tokens))
    pairs = graph.pairs()
    sampler = NegativeSampler(graph.neighbors, config.negatives, rng)
    pair_fn = _kernel_for(space)
    workers = min(config.workers, len(pairs))
    losses = []
    for epoch in range(config.epochs):
        lr = config.lr_at(epoch)
        rows = pairs[rng.permutation(len(pairs))]
        negs = sampler.sample_many(rows[:, 0])
        if workers == 1:
            total = _run_epoch(table.points, rows, negs, lr, config, space, pair_fn)
        else:
            shards = np.array_split(np.arange(len(rows)), workers)
            results = [0.0] * workers

            def work(i):
                results[i] = _run_epoch(table.points, rows[shards[i]], negs[shards[i]], lr, config, space, pair_fn)

            threads = [threading.Thread(target=work, args=(i,)) for i in range(workers)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            total = sum(results)
        mean = total / len(pairs)
        losses.append(mean)
        if on_epoch is not None:
            on_epoch(epoch, mean, lr)
        log.debug("epoch %d lr %.4g loss %.6f", epoch, lr, mean)
    return table, losses


def save_checkpoint(table: EmbeddingTable, vocab: Sequence[str], path) -> None:
    space = table.space
    m, n = table.points.shape
    if len(vocab) != m:
        raise CheckpointError(f"vocabulary has {len(vocab)} tokens for {m} rows")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{space.header} {m} {n}\n")
        for tok, point in zip(vocab, table.points):
            row = space.to_row(point)
            fh.write(tok + "\t" + " ".join(f"{x:.17g}" for x in row.tolist()) + "\n")


def load_checkpoint(path) -> EmbeddingTable:
    """Read a checkpoint; the returned table carries the vocabulary in ``tokens``."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CheckpointError(f"{path}: empty checkpoint")
    head = lines[0].split()
    spaces = {UNIT_BALL.header: UNIT_BALL.name, "poincare-v1": "poincare"}
    if len(head) != 3 or head[0] not in spaces or not head[1].isdigit() or not head[2].isdigit():
        raise CheckpointError(f"{path}: malformed header {lines[0]!r}")
    model = spaces[head[0]]
    space = get_space(model)
    m, n = int(head[1]), int(head[2])
    width = space.row_width(n)
    if len(lines) - 1 != m:
        raise CheckpointError(f"{path}: header promises {m} rows, found {len(lines) - 1} (truncated?)")
    tokens, rows = [], np.empty((m, width))
    for i, line in enumerate(lines[1:]):
        tok, sep, rest = line.partition("\t")
        vals = rest.split()
        if not sep or len(vals) != width:
            raise CheckpointError(f"{path}: row {i + 1} ({tok!r}) needs {width} floats")
        try:
            rows[i] = [float(v) for v in vals]
        except ValueError as exc:
            raise CheckpointError(f"{path}: row {i + 1} ({tok!r}): {exc}") from None
        if not np.all(np.isfinite(rows[i])) or float(rows[i] @ rows[i]) >= 1.0:
            raise CheckpointError(f"{path}: row {i + 1} ({tok!r}) is not inside the unit ball")
        tokens.append(tok)
    return EmbeddingTable(space.from_rows(rows), model, tokens)
