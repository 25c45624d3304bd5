"""Command-line entry point: ``cxhyp <command> ...``.

Every command prints one JSON document on stdout: the payload keys first, then
``"schema": "v1"``, the command name and the fully resolved config, which can be fed back through ``--config``.
Diagnostics go to stderr.  Exit codes: 0 success, 1 runtime failure, 2 usage
error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .evaluation import (
    DEFAULT_HITS,
    LINK_PREDICTION,
    RECONSTRUCTION,
    RankingTask,
    bucketed_1n_report,
    evaluate,
    parse_buckets,
)
from .geometry import CONFORMAL, QUADRATIC_FORM
from .graphs import (
    Graph,
    GraphError,
    SplitSpec,
    balanced_tree,
    compressed_graph,
    delta_hyperbolicity,
    load_edge_list,
    split_edges,
    transitive_closure,
    write_edge_list,
)
from .model import CheckpointError, TrainConfig, load_checkpoint, save_checkpoint, train

SCHEMA = "v1"
log = logging.getLogger("cxhyp")


class UsageError(Exception):
    pass


class RuntimeFailure(Exception):
    pass


DEFAULTS: dict[str, dict] = {
    "generate": {"seed": 0, "r": 3, "h": 2, "m": 7, "k": 1, "delta": False},
    "train": {
        "model": "unitball",
        "seed": 0,
        "dim": 10,
        "epochs": 300,
        "lr": 0.5,
        "negatives": 50,
        "burnin": 10,
        "burnin_factor": 10.0,
        "eps_proj": 1e-5,
        "metric_mode": "conformal",
        "batch_size": 1,
        "denominator": "softmax",
        "undirected": False,
    },
    "eval": {
        "mode": RECONSTRUCTION,
        "hits": ",".join(map(str, DEFAULT_HITS)),
        "buckets": None,
        "train": [],
        "base": None,
        "unfiltered": False,
        "undirected": False,
    },
    "hyperbolicity": {"mode": "exact", "samples": 100000, "seed": 0, "node_cap": 1500},
    "split": {"fractions": "0.9,0.05,0.05", "seed": 0},
    "closure": {},
}
REQUIRED = {
    "generate": ("kind", "out"),
    "train": ("edges", "out"),
    "eval": ("checkpoint", "edges"),
    "hyperbolicity": ("edges",),
    "split": ("edges", "out_dir"),
    "closure": ("edges", "out"),
}


def _workers_default() -> int:
    raw = os.environ.get("CXHYP_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"CXHYP_WORKERS must be an integer, got {raw!r}") from None


def _parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    top = argparse.ArgumentParser(prog="cxhyp", description=__doc__.splitlines()[0])
    top.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = top.add_subparsers(dest="command", required=True)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text, argument_default=S)
        p.add_argument("--config", help="JSON file of option values; flags override it")
        return p

    g = command("generate", "write a synthetic edge list")
    g.add_argument("kind", nargs="?", help="balanced_tree or compressed_graph")
    g.add_argument("--out", help="output TSV path")
    g.add_argument("--r", type=int, help="branching factor (balanced_tree)")
    g.add_argument("--h", type=int, help="depth (balanced_tree)")
    g.add_argument("--m", type=int, help="node count (compressed_graph)")
    g.add_argument("--k", type=int, help="number of random trees (compressed_graph)")
    g.add_argument("--seed", type=int)
    g.add_argument("--delta", action="store_true", help="also report exact delta-hyperbolicity")

    t = command("train", "train embeddings and write a checkpoint")
    t.add_argument("edges", nargs="?")
    t.add_argument("--out", help="checkpoint path")
    t.add_argument("--model", choices=["unitball", "poincare"])
    t.add_argument("--seed", type=int)
    t.add_argument("--dim", type=int)
    t.add_argument("--epochs", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--negatives", type=int)
    t.add_argument("--burnin", type=int, help="burn-in epochs")
    t.add_argument("--burnin-factor", type=float)
    t.add_argument("--eps-proj", type=float)
    t.add_argument("--metric-mode", choices=["conformal", "quadratic"])
    t.add_argument("--batch-size", type=int)
    t.add_argument(
        "--denominator",
        choices=["softmax", "literal"],
        help="softmax: negatives plus the positive; literal: negatives plus the self term",
    )
    t.add_argument("--undirected", action="store_true", help="train on both orientations of each edge")
    t.add_argument("--workers", type=int)

    e = command("eval", "rank neighbours and print MAP / MRR / Hits@N")
    e.add_argument("checkpoint", nargs="?")
    e.add_argument("edges", nargs="?", help="edges to evaluate")
    e.add_argument("--mode", choices=["reconstruction", "link"])
    e.add_argument("--train", action="append", help="known edges to filter (link mode, repeatable)")
    e.add_argument("--hits", help="comma-separated N values")
    e.add_argument("--buckets", help='parent-count buckets, e.g. "1,2-5,6-10,11-20,20+"')
    e.add_argument("--base", help="pre-closure edge list for bucket parent counts")
    e.add_argument("--unfiltered", action="store_true", help="do not filter other true neighbours")
    e.add_argument("--undirected", action="store_true", help="rank both endpoints of each edge")
    e.add_argument("--workers", type=int)

    y = command("hyperbolicity", "Gromov delta of an edge list")
    y.add_argument("edges", nargs="?")
    y.add_argument("--mode", choices=["exact", "sampled"])
    y.add_argument("--samples", type=int)
    y.add_argument("--seed", type=int)
    y.add_argument("--node-cap", type=int)

    s = command("split", "split edges into train / valid / test files")
    s.add_argument("edges", nargs="?")
    s.add_argument("--out-dir")
    s.add_argument("--fractions", help="train,valid,test")
    s.add_argument("--seed", type=int)

    c = command("closure", "write the transitive closure of a DAG edge list")
    c.add_argument("edges", nargs="?")
    c.add_argument("--out")
    return top


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the ``--config`` file, then explicit flags."""
    given = vars(args).copy()
    cmd = given.pop("command")
    given.pop("verbose", None)
    cfg = dict(DEFAULTS[cmd])
    if cmd in ("train", "eval"):
        cfg["workers"] = _workers_default()
    path = given.pop("config", None)
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError(f"config {path} must hold a JSON object")
        loaded.pop("schema", None)
        if loaded.pop("command", cmd) != cmd:
            raise UsageError(f"config {path} was written for another command")
        known = set(cfg) | set(REQUIRED[cmd])
        unknown = sorted(set(loaded) - known)
        if unknown:
            raise UsageError(f"config {path}: unknown key {unknown[0]!r}")
        cfg.update(loaded)
    cfg.update(given)
    missing = [k for k in REQUIRED[cmd] if cfg.get(k) is None]
    if missing:
        raise UsageError(f"{cmd}: missing required argument {missing[0]!r}")
    return cfg


def _emit(cmd: str, cfg: dict, payload: dict) -> None:
    doc = {**payload, "schema": SCHEMA, "command": cmd, "config": {"command": cmd, **cfg}}
    sys.stdout.write(json.dumps(doc) + "\n")


def _load(path, undirected: bool = False) -> Graph:
    try:
        return load_edge_list(path, directed=not undirected)
    except OSError as exc:
        raise RuntimeFailure(f"cannot read {path}: {exc.strerror or exc}") from None


def cmd_generate(cfg: dict) -> dict:
    kind = cfg["kind"]
    if kind == "balanced_tree":
        if cfg["r"] < 2 or cfg["h"] < 1:
            raise UsageError("balanced_tree needs --r >= 2 and --h >= 1")
        g = balanced_tree(cfg["r"], cfg["h"])
    elif kind == "compressed_graph":
        if cfg["m"] < 2 or cfg["k"] < 1:
            raise UsageError("compressed_graph needs --m >= 2 and --k >= 1")
        g = compressed_graph(cfg["m"], cfg["k"], seed=cfg["seed"])
    else:
        raise UsageError(f"unknown generator {kind!r}")
    try:
        write_edge_list(g, cfg["out"])
    except OSError as exc:
        raise RuntimeFailure(f"cannot write {cfg['out']}: {exc.strerror or exc}") from None
    out = {"nodes": g.num_nodes, "edges": g.num_edges}
    if cfg["delta"]:
        out["delta"] = delta_hyperbolicity(g, mode="exact")
    return out


def _train_config(cfg: dict) -> TrainConfig:
    literal = cfg["denominator"] == "literal"
    if cfg["denominator"] not in ("softmax", "literal"):
        raise UsageError(f"unknown denominator {cfg['denominator']!r}")
    try:
        return TrainConfig(
            dim=cfg["dim"],
            epochs=cfg["epochs"],
            lr=cfg["lr"],
            burnin_epochs=cfg["burnin"],
            burnin_factor=cfg["burnin_factor"],
            negatives=cfg["negatives"],
            eps_proj=cfg["eps_proj"],
            metric_mode=QUADRATIC_FORM if cfg["metric_mode"] == "quadratic" else cfg["metric_mode"],
            seed=cfg["seed"],
            batch_size=cfg["batch_size"],
            include_positive_in_denominator=not literal,
            include_self_in_denominator=literal,
            workers=cfg["workers"],
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid training option: {exc}") from None


def cmd_train(cfg: dict) -> dict:
    config = _train_config(cfg)
    if cfg["model"] == "poincare" and config.metric_mode != CONFORMAL:
        raise UsageError("the poincare model supports only the conformal metric mode")
    if not Path(cfg["out"]).resolve().parent.is_dir():
        raise RuntimeFailure(f"cannot write {cfg['out']}: directory does not exist")
    graph = _load(cfg["edges"], cfg["undirected"])
    if graph.num_edges == 0:
        raise RuntimeFailure(f"{cfg['edges']} has no edges")
    trace = []
    start = time.perf_counter()

    def on_epoch(epoch, loss, lr):
        trace.append({"epoch": epoch, "loss": loss, "lr": lr, "seconds": time.perf_counter() - start})
        log.info("epoch %d loss %.6f", epoch, loss)

    table, _ = train(graph, config, model=cfg["model"], on_epoch=on_epoch)
    try:
        save_checkpoint(table, graph.tokens, cfg["out"])
    except OSError as exc:
        raise RuntimeFailure(f"cannot write {cfg['out']}: {exc.strerror or exc}") from None
    return {
        "checkpoint": str(cfg["out"]),
        "nodes": graph.num_nodes,
        "edges": graph.num_edges,
        "trace": trace,
        "seconds": time.perf_counter() - start,
    }


def _remap(graph: Graph, index: dict[str, int], path) -> np.ndarray:
    """Edge ids of ``graph`` translated into checkpoint row ids."""
    for tok in graph.tokens:
        if tok not in index:
            raise RuntimeFailure(f"vocabulary mismatch: token {tok!r} from {path} is not in the checkpoint")
    ids = np.array([index[t] for t in graph.tokens], dtype=np.int64)
    return ids[graph.edges] if graph.num_edges else np.zeros((0, 2), dtype=np.int64)


def _parse_hits(raw) -> tuple[int, ...]:
    try:
        vals = tuple(int(x) for x in (raw.split(",") if isinstance(raw, str) else raw))
    except ValueError:
        raise UsageError(f"--hits must be comma-separated integers, got {raw!r}") from None
    if not vals or min(vals) < 1:
        raise UsageError("--hits values must be >= 1")
    return vals


def cmd_eval(cfg: dict) -> dict:
    hits = _parse_hits(cfg["hits"])
    try:
        buckets = None if cfg["buckets"] is None else parse_buckets(cfg["buckets"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    mode = LINK_PREDICTION if cfg["mode"] in ("link", LINK_PREDICTION) else cfg["mode"]
    if mode not in (RECONSTRUCTION, LINK_PREDICTION):
        raise UsageError(f"unknown mode {cfg['mode']!r}")
    train_paths = [cfg["train"]] if isinstance(cfg["train"], str) else list(cfg["train"])
    if mode == LINK_PREDICTION and not train_paths:
        raise UsageError("link mode needs at least one --train edge list")
    try:
        table = load_checkpoint(cfg["checkpoint"])
    except OSError as exc:
        raise RuntimeFailure(f"cannot read {cfg['checkpoint']}: {exc.strerror or exc}") from None
    index = {t: i for i, t in enumerate(table.tokens)}
    undirected = cfg["undirected"]
    target = _remap(_load(cfg["edges"], undirected), index, cfg["edges"])
    target_graph = Graph(list(table.tokens), target, directed=not undirected)
    if mode == RECONSTRUCTION:
        graph = target_graph
        task = RankingTask(RECONSTRUCTION, graph, filtered=not cfg["unfiltered"])
    else:
        known = np.concatenate([_remap(_load(p, undirected), index, p) for p in train_paths])
        graph = Graph(list(table.tokens), np.concatenate([target, known]), directed=not undirected)
        known_pairs = Graph(list(table.tokens), known, directed=not undirected).pairs()
        task = RankingTask(LINK_PREDICTION, graph, eval_edges=target_graph.pairs(), train_edges=known_pairs)
    workers = cfg["workers"]
    if buckets is None:
        report = evaluate(table, task, hits=hits, workers=workers)
    else:
        base = graph
        if cfg["base"] is not None:
            base = Graph(list(table.tokens), _remap(_load(cfg["base"]), index, cfg["base"]))
        report = bucketed_1n_report(table, task, buckets, base_graph=base, hits=hits, workers=workers)
    return report.to_dict()


def cmd_hyperbolicity(cfg: dict) -> dict:
    if cfg["mode"] not in ("exact", "sampled"):
        raise UsageError(f"unknown mode {cfg['mode']!r}")
    graph = _load(cfg["edges"])
    try:
        delta = delta_hyperbolicity(
            graph, mode=cfg["mode"], samples=cfg["samples"], seed=cfg["seed"], node_cap=cfg["node_cap"]
        )
    except GraphError as exc:
        raise RuntimeFailure(str(exc)) from None
    return {"delta": delta, "nodes": graph.num_nodes, "edges": graph.num_edges}


def cmd_split(cfg: dict) -> dict:
    try:
        fr = [float(x) for x in str(cfg["fractions"]).split(",")]
        spec = SplitSpec(*fr, seed=cfg["seed"])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad --fractions {cfg['fractions']!r}: {exc}") from None
    graph = _load(cfg["edges"])
    parts = split_edges(graph, spec)
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    sizes = {}
    for name, edges in zip(("train", "valid", "test"), parts):
        write_edge_list(graph.with_edges(edges), out_dir / f"{name}.tsv")
        sizes[name] = int(len(edges))
    return {"sizes": sizes, "out_dir": str(out_dir)}


def cmd_closure(cfg: dict) -> dict:
    graph = _load(cfg["edges"])
    closed = transitive_closure(graph)
    write_edge_list(closed, cfg["out"])
    return {"nodes": closed.num_nodes, "edges": closed.num_edges, "input_edges": graph.num_edges}


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "eval": cmd_eval,
    "hyperbolicity": cmd_hyperbolicity,
    "split": cmd_split,
    "closure": cmd_closure,
}


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)  # exits with 2 on bad flags
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(name)s: %(message)s",
    )
    cmd = args.command
    try:
        cfg = resolve(args)
        payload = COMMANDS[cmd](cfg)
    except UsageError as exc:
        print(f"cxhyp {cmd}: error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeFailure, GraphError, CheckpointError, OSError, ValueError) as exc:
        print(f"cxhyp {cmd}: error: {exc}", file=sys.stderr)
        return 1
    _emit(cmd, cfg, payload)
    return 0


if __name__ == "__main__":
    sys.exit(main())
