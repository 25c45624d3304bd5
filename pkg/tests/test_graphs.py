import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cxhyp import graphs as gx
from cxhyp.graphs import CycleError, Graph, GraphError, SplitSpec
from oracles import brute_delta


def write(tmp_path, text, name="e.tsv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def random_dag(rng, m, p=0.2) -> Graph:
    edges = [(u, v) for u in range(m) for v in range(u + 1, m) if rng.random() < p]
    perm = rng.permutation(m)
    return Graph([f"v{i}" for i in range(m)], np.array([(perm[u], perm[v]) for u, v in edges]).reshape(-1, 2))


def to_nx(g: Graph) -> nx.Graph:
    h = nx.DiGraph() if g.directed else nx.Graph()
    h.add_nodes_from(range(g.num_nodes))
    h.add_edges_from(g.edges.tolist())
    return h


class TestGraph:
    def test_dedup_and_canonical_order(self):
        g = Graph(list("abc"), [(2, 1), (1, 2), (2, 1)], directed=False)
        assert g.edges.tolist() == [[1, 2]]
        assert sorted(map(tuple, g.pairs().tolist())) == [(1, 2), (2, 1)]

    def test_invariants(self):
        with pytest.raises(GraphError, match="self-loop"):
            Graph(list("ab"), [(1, 1)])
        with pytest.raises(GraphError, match="range"):
            Graph(list("ab"), [(0, 2)])

    def test_edges_read_only(self):
        g = gx.balanced_tree(2, 1)
        with pytest.raises(ValueError):
            g.edges[0, 0] = 1

    def test_neighbors_are_undirected(self):
        g = Graph(list("abc"), [(0, 1), (2, 1)])
        assert g.neighbors == [{1}, {0, 2}, {1}]
        assert g.out_degree().tolist() == [1, 0, 1]


class TestLoadEdgeList:
    def test_basic(self, tmp_path):
        g = gx.load_edge_list(write(tmp_path, "a\tb\nb\tc\n"))
        assert g.tokens == ["a", "b", "c"] and g.num_edges == 2

    def test_duplicates_collapse(self, tmp_path):
        g = gx.load_edge_list(write(tmp_path, "a\tb\na\tb\n\n"))
        assert g.num_edges == 1

    def test_self_loop(self, tmp_path):
        with pytest.raises(GraphError, match=r":1: self-loop"):
            gx.load_edge_list(write(tmp_path, "a\ta\n"))

    @pytest.mark.parametrize("text", ["a\tb\nc\n", "a\tb\nc\td\te\n", "a\tb\n\tb\n"])
    def test_malformed_line_number(self, tmp_path, text):
        with pytest.raises(GraphError, match=r":2:"):
            gx.load_edge_list(write(tmp_path, text))

    def test_round_trip(self, tmp_path):
        g = gx.compressed_graph(20, 2, seed=1)
        gx.write_edge_list(g, tmp_path / "g.tsv")
        back = gx.load_edge_list(tmp_path / "g.tsv", directed=False)
        named = {tuple(sorted((g.tokens[u], g.tokens[v]))) for u, v in g.edges.tolist()}
        got = {tuple(sorted((back.tokens[u], back.tokens[v]))) for u, v in back.edges.tolist()}
        assert named == got

    def test_unicode_tokens(self, tmp_path):
        g = gx.load_edge_list(write(tmp_path, "Prüfer\tÅngström\n"))
        assert g.tokens == ["Prüfer", "Ångström"]


class TestClosure:
    def test_chain(self):
        g = Graph(list("abc"), [(0, 1), (1, 2)])
        assert gx.transitive_closure(g).edge_set() == {(0, 1), (1, 2), (0, 2)}

    def test_edgeless(self):
        assert gx.transitive_closure(Graph(list("ab"), [])).num_edges == 0

    def test_matches_networkx(self, rng):
        for _ in range(10):
            g = random_dag(rng, 20)
            want = set(nx.transitive_closure_dag(to_nx(g)).edges())
            assert gx.transitive_closure(g).edge_set() == want

    def test_idempotent(self, rng):
        g = random_dag(rng, 25, 0.15)
        once = gx.transitive_closure(g)
        assert gx.transitive_closure(once).edge_set() == once.edge_set()

    def test_cycle_reported(self):
        g = Graph(list("abcd"), [(0, 1), (1, 2), (2, 3), (3, 1)])
        with pytest.raises(CycleError) as info:
            gx.transitive_closure(g)
        cyc = info.value.cycle
        assert cyc[0] == cyc[-1] and set(cyc) == {"b", "c", "d"}
        assert "b" in str(info.value)

    def test_undirected_rejected(self):
        with pytest.raises(GraphError):
            gx.transitive_closure(gx.compressed_graph(5, 1))


class TestBalancedTree:
    @pytest.mark.parametrize("r, h", list(itertools.product([2, 3, 10], [1, 2, 3])))
    def test_counts(self, r, h):
        g = gx.balanced_tree(r, h)
        m = sum(r**i for i in range(h + 1))
        assert g.num_nodes == m and g.num_edges == m - 1
        assert nx.is_tree(to_nx(g).to_undirected())

    def test_examples(self):
        assert (gx.balanced_tree(2, 2).num_nodes, gx.balanced_tree(2, 2).num_edges) == (7, 6)
        assert gx.balanced_tree(10, 2).num_nodes == 111

    def test_child_to_parent(self):
        g = gx.balanced_tree(3, 2)
        assert np.all(g.edges[:, 0] > g.edges[:, 1])
        assert g.out_degree()[0] == 0 and np.all(g.out_degree()[1:] == 1)

    @pytest.mark.parametrize("r, h", [(2, 2), (3, 2), (2, 4), (10, 1)])
    def test_delta_zero(self, r, h):
        assert gx.delta_hyperbolicity(gx.balanced_tree(r, h)) == 0.0

    def test_bad_params(self):
        with pytest.raises(GraphError):
            gx.balanced_tree(1, 2)


class TestPrufer:
    @settings(max_examples=100, deadline=None)
    @given(st.integers(3, 30).flatmap(lambda m: st.lists(st.integers(0, m - 1), min_size=m - 2, max_size=m - 2)))
    def test_matches_networkx(self, seq):
        ours = {tuple(sorted(e)) for e in gx.prufer_to_edges(seq)}
        theirs = {tuple(sorted(e)) for e in nx.from_prufer_sequence(seq).edges()}
        assert ours == theirs


class TestCompressedGraph:
    def test_single_tree(self):
        g = gx.compressed_graph(50, 1, seed=3)
        assert g.num_edges == 49 and nx.is_tree(to_nx(g))
        assert gx.delta_hyperbolicity(g) == 0.0

    def test_union_bound_and_canonical(self):
        for k in (1, 2, 5):
            g = gx.compressed_graph(30, k, seed=k)
            assert g.num_edges <= k * 29
            assert np.all(g.edges[:, 0] < g.edges[:, 1]) and not g.directed

    def test_deterministic(self):
        a, b = gx.compressed_graph(40, 3, seed=9), gx.compressed_graph(40, 3, seed=9)
        assert np.array_equal(a.edges, b.edges)

    def test_seven_nodes_two_trees_half_delta(self):
        # fixture seed; the union of two 7-node trees can be 0.5-hyperbolic
        g = gx.compressed_graph(7, 2, seed=6)
        assert gx.delta_hyperbolicity(g) == 0.5

    def test_bad_params(self):
        with pytest.raises(GraphError):
            gx.compressed_graph(1, 1)


class TestSplit:
    def test_all_train(self):
        g = gx.balanced_tree(3, 2)
        train, valid, test = gx.split_edges(g, SplitSpec(1.0, 0.0, 0.0))
        assert len(train) == g.num_edges and len(valid) == len(test) == 0

    def test_sizes_and_constraint(self):
        g = gx.compressed_graph(400, 3, seed=0)
        g = g.with_edges(g.edges[:1000])
        assert g.num_edges == 1000
        train, valid, test = gx.split_edges(g, SplitSpec())
        assert (len(train), len(valid), len(test)) == (900, 50, 50)
        all_edges = {tuple(e) for part in (train, valid, test) for e in part.tolist()}
        assert all_edges == g.edge_set()
        seen = set(train.ravel().tolist())
        assert set(valid.ravel().tolist()) <= seen and set(test.ravel().tolist()) <= seen

    def test_deterministic(self):
        g = gx.compressed_graph(100, 2, seed=1)
        a = gx.split_edges(g, SplitSpec(seed=4))
        b = gx.split_edges(g, SplitSpec(seed=4))
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_unsatisfiable(self):
        g = Graph(list("abc"), [(0, 1), (1, 2)])
        with pytest.raises(GraphError, match="smaller"):
            gx.split_edges(g, SplitSpec(0.2, 0.4, 0.4))

    @pytest.mark.parametrize("fr", [(0.5, 0.5, 0.5), (0.0, 0.5, 0.5), (1.1, -0.05, -0.05)])
    def test_bad_fractions(self, fr):
        with pytest.raises(ValueError):
            SplitSpec(*fr)


class TestDelta:
    def test_cycle_four(self):
        assert gx.delta_hyperbolicity(Graph(list("abcd"), [(0, 1), (1, 2), (2, 3), (3, 0)])) == 1.0

    def test_path(self):
        assert gx.delta_hyperbolicity(Graph(list("abcde"), [(0, 1), (1, 2), (2, 3), (3, 4)])) == 0.0

    def test_hop_distances_match_networkx(self):
        g = gx.compressed_graph(30, 2, seed=2)
        d = gx.hop_distances(g)
        want = dict(nx.all_pairs_shortest_path_length(to_nx(g)))
        for u in range(30):
            for v in range(30):
                assert d[u, v] == want[u][v]

    def test_brute_force_agreement(self, rng):
        for seed in range(8):
            g = gx.compressed_graph(10, 3, seed=seed)
            assert gx.delta_hyperbolicity(g) == brute_delta(gx.hop_distances(g))

    def test_sampled_is_lower_bound(self):
        for seed in range(5):
            g = gx.compressed_graph(40, 3, seed=seed)
            exact = gx.delta_hyperbolicity(g)
            sampled = gx.delta_hyperbolicity(g, "sampled", samples=2000, seed=seed)
            assert sampled <= exact

    def test_sampled_tolerates_components(self):
        g = Graph([str(i) for i in range(8)], [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4)])
        assert gx.delta_hyperbolicity(g, "sampled", samples=5000) == 1.0
        with pytest.raises(GraphError, match="sampled"):
            gx.delta_hyperbolicity(g)

    def test_node_cap(self):
        with pytest.raises(GraphError, match="sampled mode"):
            gx.delta_hyperbolicity(gx.balanced_tree(2, 4), node_cap=10)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            gx.delta_hyperbolicity(gx.balanced_tree(2, 2), mode="fast")


class TestTaxonomy:
    def test_is_multiparent_dag(self):
        g = gx.random_taxonomy(300, seed=1)
        assert nx.is_directed_acyclic_graph(to_nx(g))
        assert g.out_degree()[0] == 0 and np.all(g.out_degree()[1:] >= 1)
        assert g.out_degree().max() > 1
