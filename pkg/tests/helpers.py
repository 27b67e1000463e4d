"""Independent oracles used by the test suite.

These deliberately re-derive results with the dumbest possible method
(full double loops, explicit per-node iteration) so they share no code
with the implementations they check.
"""

import numpy as np

from hetlink.hetgraph import HeteroGraph


def pair_counting_auc(scores, labels):
    """O(P*N) concordant-pair AUC with half credit for ties."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(pos) * len(neg))


def brute_force_sage_forward(graph, params):
    """Literal full-graph embedding generation, per-node Python loops.

    No sampling, no dropout: h0 = attributes; for each layer, for each
    node, mean of linked neighbors' previous vectors (zero vector if
    none), concat with own previous vector, multiply by that node
    label's relation matrix, ReLU, then L2-normalize. Returns one row
    per node id.
    """
    h = {}
    for v in range(graph.n_nodes):
        h[v] = np.asarray(graph.node_attrs(v), dtype=float)
    linked = {v: [] for v in range(graph.n_nodes)}
    for u, v, _, w in graph.edges():
        if w is None or w > 0:
            linked[u].append(v)
            linked[v].append(u)
    for i in range(1, params.depth + 1):
        new_h = {}
        for v in range(graph.n_nodes):
            nbrs = sorted(linked[v])
            if nbrs:
                agg = np.mean([h[u] for u in nbrs], axis=0)
            else:
                other = [u for u in range(graph.n_nodes)
                         if graph.node_label(u) != graph.node_label(v)]
                dim = h[other[0]].size if other else h[v].size
                agg = np.zeros(dim)
            concat = np.concatenate([h[v], agg])
            pre = concat @ params.weights[(i, graph.node_label(v))]
            act = np.maximum(pre, 0.0)
            norm = np.linalg.norm(act)
            new_h[v] = act / norm if norm > 0 else act
        h = new_h
    return np.stack([h[v] for v in range(graph.n_nodes)])


def random_binodal_graph(rng, max_nodes=6, d_a=3, d_b=2):
    """Small random two-label attributed graph with 0/1 edge weights."""
    n_a = int(rng.integers(1, max_nodes // 2 + 1))
    n_b = int(rng.integers(1, max_nodes - n_a + 1))
    g = HeteroGraph()
    for i in range(n_a):
        g.add_node("Adverse Event", attrs=rng.normal(size=d_a), name=f"a{i}")
    for i in range(n_b):
        g.add_node("Clinical Trial", attrs=rng.normal(size=d_b), name=f"t{i}")
    for a in range(n_a):
        for b in range(n_b):
            if rng.random() < 0.6:
                g.add_edge(a, n_a + b, "Expresses",
                           weight=float(rng.random() < 0.7))
    return g.freeze()


def double_loop_node_pairs_kernel(g, h, sigma):
    """Direct double sum of RBF values over node attribute pairs."""
    total = 0.0
    for u in range(g.n_nodes):
        x = g.node_attrs(u)
        for v in range(h.n_nodes):
            y = h.node_attrs(v)
            total += np.exp(-float(np.sum((x - y) ** 2)) / (2.0 * sigma**2))
    return total
