import numpy as np
import pytest

from hetlink.hetgraph import HeteroGraph, structurally_equal


def star_graph(leaves=3):
    g = HeteroGraph()
    center = g.add_node("Hub", name="hub")
    for i in range(leaves):
        leaf = g.add_node("Leaf", name=f"leaf{i}")
        g.add_edge(center, leaf, "Spoke")
    return g.freeze()


def random_graph(rng, n_nodes=12, n_edges=20):
    g = HeteroGraph()
    labels = ["A", "B", "C"]
    for i in range(n_nodes):
        g.add_node(labels[int(rng.integers(len(labels)))], name=f"n{i}")
    for _ in range(n_edges):
        u, v = int(rng.integers(n_nodes)), int(rng.integers(n_nodes))
        g.add_edge(u, v, "E", weight=float(rng.random()))
    return g.freeze()


class TestConstruction:
    def test_first_node_id_is_zero(self):
        g = HeteroGraph()
        assert g.add_node("X") == 0

    def test_node_ids_contiguous(self):
        g = HeteroGraph()
        assert [g.add_node("X"), g.add_node("Y")] == [0, 1]

    def test_attr_dim_conflict_rejected(self):
        g = HeteroGraph()
        g.add_node("X", attrs=[1.0, 2.0])
        with pytest.raises(ValueError, match="dimension"):
            g.add_node("X", attrs=[1.0, 2.0, 3.0])

    def test_attr_dims_independent_across_labels(self):
        g = HeteroGraph()
        g.add_node("X", attrs=[1.0, 2.0])
        g.add_node("Y", attrs=[1.0, 2.0, 3.0])  # different label is fine

    def test_edge_endpoint_out_of_range(self):
        g = HeteroGraph()
        g.add_node("X")
        g.add_node("X")
        with pytest.raises(IndexError):
            g.add_edge(0, 99, "E")

    def test_frozen_graph_rejects_mutation(self):
        g = star_graph()
        with pytest.raises(RuntimeError):
            g.add_node("X")
        with pytest.raises(RuntimeError):
            g.add_edge(0, 1, "E")

    def test_self_loop_allowed_and_flagged(self):
        g = HeteroGraph()
        g.add_node("X")
        e = g.add_edge(0, 0, "E")
        assert g.self_loops == [e]
        g.freeze()
        # loop appears twice in its endpoint's adjacency (handshake holds)
        assert g.degree(0) == 2


class TestNeighbors:
    def test_undirected_symmetry(self):
        g = HeteroGraph()
        g.add_node("CT")
        g.add_node("AE")
        g.add_edge(0, 1, "Expresses")
        g.freeze()
        assert 1 in g.neighbors(0)
        assert 0 in g.neighbors(1)

    def test_duplicate_edge_grows_adjacency(self):
        g = HeteroGraph()
        g.add_node("X")
        g.add_node("X")
        g.add_edge(0, 1, "E")
        g.add_edge(0, 1, "E")
        g.freeze()
        assert g.degree(0) == 2 and g.degree(1) == 2
        assert g.neighbors(0) == [1, 1]

    def test_star_center_has_all_leaves(self):
        g = star_graph(3)
        assert g.neighbors(0) == [1, 2, 3]

    def test_label_filter_no_match_is_empty(self):
        g = star_graph(3)
        assert g.neighbors(0, edge_label="Nope") == []
        assert g.neighbors(0, node_label="Nope") == []

    def test_path_graph_middle(self):
        g = HeteroGraph()
        for _ in range(3):
            g.add_node("X")
        g.add_edge(0, 1, "E")
        g.add_edge(1, 2, "E")
        g.freeze()
        assert g.neighbors(1) == [0, 2]

    def test_neighbors_by_label_matches_filtered(self):
        rng = np.random.default_rng(7)
        g = random_graph(rng)
        for v in range(g.n_nodes):
            for label in ("A", "B", "C"):
                assert list(g.neighbors_by_label(v, label)) == g.neighbors(
                    v, node_label=label
                )


class TestInducedSubgraph:
    def test_full_set_is_isomorphic_copy(self):
        g = star_graph()
        sub = g.induced_subgraph(range(g.n_nodes))
        assert structurally_equal(g, sub)

    def test_empty_set(self):
        g = star_graph()
        sub = g.induced_subgraph([])
        assert sub.n_nodes == 0 and sub.n_edges == 0

    def test_triangle_minus_one_node(self):
        g = HeteroGraph()
        for _ in range(3):
            g.add_node("X")
        g.add_edge(0, 1, "E")
        g.add_edge(1, 2, "E")
        g.add_edge(2, 0, "E")
        g.freeze()
        sub = g.induced_subgraph({0, 1})
        assert sub.n_nodes == 2 and sub.n_edges == 1

    def test_edge_count_matches_brute_force(self):
        rng = np.random.default_rng(3)
        for trial in range(20):
            g = random_graph(rng, n_nodes=int(rng.integers(4, 20)))
            keep = set(
                int(v) for v in rng.choice(g.n_nodes, size=g.n_nodes // 2, replace=False)
            )
            expected = sum(
                1 for u, v, _, _ in g.edges() if u in keep and v in keep
            )
            assert g.induced_subgraph(keep).n_edges == expected

    def test_invalid_id_rejected(self):
        g = star_graph()
        with pytest.raises(IndexError):
            g.induced_subgraph({0, 99})


class TestInvariants:
    def test_handshake(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            g = random_graph(rng)
            assert sum(g.degree(v) for v in range(g.n_nodes)) == 2 * g.n_edges

    def test_neighbors_union_recovers_edge_set(self):
        rng = np.random.default_rng(13)
        g = random_graph(rng)
        recovered = set()
        for v in range(g.n_nodes):
            for nbr in g.neighbors(v):
                recovered.add((min(v, nbr), max(v, nbr)))
        expected = {(min(u, v), max(u, v)) for u, v, _, _ in g.edges()}
        assert recovered == expected

    def test_labelling_total(self):
        rng = np.random.default_rng(17)
        g = random_graph(rng)
        for v in range(g.n_nodes):
            assert g.node_label(v)

    def test_count_by_label_sums(self):
        rng = np.random.default_rng(19)
        g = random_graph(rng)
        node_counts, edge_counts = g.count_by_label()
        assert sum(node_counts.values()) == g.n_nodes
        assert sum(edge_counts.values()) == g.n_edges

    def test_count_by_label_empty_graph(self):
        g = HeteroGraph().freeze()
        assert g.count_by_label() == ({}, {})


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        g = HeteroGraph()
        g.add_node("CT", attrs=[0.1, 1 / 3, 2.0e-17], name="NCT00001596")
        g.add_node("AE", attrs=[0.028571429, 0.575600801], name="AE_COPD")
        g.add_node("Drug", name="pirfenidone")
        g.add_edge(0, 1, "Expresses", weight=1.0)
        g.add_edge(0, 2, "Treatment")
        g.freeze()
        g.save(tmp_path / "g")
        loaded = HeteroGraph.load(tmp_path / "g")
        assert structurally_equal(g, loaded)
        # byte-for-byte identical when re-saved
        loaded.save(tmp_path / "g2")
        for name in ("nodes.tsv", "edges.tsv"):
            assert (tmp_path / "g" / name).read_bytes() == (
                tmp_path / "g2" / name
            ).read_bytes()

    def test_without_edges(self):
        g = star_graph(4)
        pruned = g.without_edges([0, 2])
        assert pruned.n_edges == 2
        assert pruned.n_nodes == g.n_nodes
