"""Node/edge-labelled, optionally attributed undirected multigraph.

Nodes carry a label from a finite alphabet, an optional real attribute
vector, and a display name. Edges carry a label and an optional weight.
The graph is built incrementally, then frozen; every downstream consumer
(walks, GNN, kernels) requires a frozen graph. Frozen graphs are
immutable and safe to share across workers.

Serialization is a two-file TSV format (``nodes.tsv`` / ``edges.tsv``)
with a bit-exact round trip.
"""

from __future__ import annotations

import os
from typing import Iterable

import numpy as np

NodeId = int

_NODES_FILE = "nodes.tsv"
_EDGES_FILE = "edges.tsv"


class HeteroGraph:
    """Undirected multigraph with labelled, optionally attributed nodes.

    Attribute vectors attached to nodes of the same label must share one
    dimension. Adjacency is kept symmetric: an edge (u, v) is listed
    under both endpoints. After :meth:`freeze`, adjacency lists are
    normalized to ascending (neighbor id, edge index) order so that every
    seeded downstream algorithm is reproducible.
    """

    def __init__(self):
        self._labels: list[str] = []
        self._names: list[str] = []
        self._attrs: list[np.ndarray | None] = []
        self._edges: list[tuple[int, int, str, float | None]] = []
        self._adj: list[list[tuple[int, int]]] = []
        self._label_dims: dict[str, int] = {}
        self._self_loops: list[int] = []
        self._frozen = False
        self._neighbor_sets: list[frozenset[int]] | None = None
        self._label_nodes: dict[str, list[int]] | None = None
        self._label_adj_cache: dict[tuple[int, str], np.ndarray] = {}

    # -- construction ---------------------------------------------------

    def _check_mutable(self):
        if self._frozen:
            raise RuntimeError("graph is frozen; construction is closed")

    def add_node(self, label: str, attrs=None, name: str = "") -> NodeId:
        """Add a node, returning its id (contiguous from 0)."""
        self._check_mutable()
        if attrs is not None:
            attrs = np.asarray(attrs, dtype=np.float64)
            if attrs.ndim != 1 or attrs.size == 0:
                raise ValueError("attrs must be a nonempty 1-d vector")
            known = self._label_dims.get(label)
            if known is not None and known != attrs.size:
                raise ValueError(
                    f"attribute dimension {attrs.size} conflicts with prior "
                    f"{known}-dim attributes on label {label!r}"
                )
            self._label_dims[label] = attrs.size
        node = len(self._labels)
        self._labels.append(label)
        self._names.append(name)
        self._attrs.append(attrs)
        self._adj.append([])
        return node

    def add_edge(self, u: NodeId, v: NodeId, label: str, weight=None) -> int:
        """Add an undirected edge; self-loops are allowed but tracked."""
        self._check_mutable()
        n = len(self._labels)
        for endpoint in (u, v):
            if not 0 <= endpoint < n:
                raise IndexError(f"node id {endpoint} out of range [0, {n})")
        edge = len(self._edges)
        self._edges.append((u, v, label, None if weight is None else float(weight)))
        self._adj[u].append((v, edge))
        self._adj[v].append((u, edge))
        if u == v:
            self._self_loops.append(edge)
        return edge

    def freeze(self) -> "HeteroGraph":
        """Close construction: normalize adjacency order, enable queries."""
        if not self._frozen:
            for entries in self._adj:
                entries.sort()
            self._neighbor_sets = [
                frozenset(nbr for nbr, _ in entries) for entries in self._adj
            ]
            label_nodes: dict[str, list[int]] = {}
            for node, label in enumerate(self._labels):
                label_nodes.setdefault(label, []).append(node)
            self._label_nodes = label_nodes
            self._frozen = True
        return self

    # -- basic queries ----------------------------------------------------

    @property
    def frozen(self) -> bool:
        return self._frozen

    @property
    def n_nodes(self) -> int:
        return len(self._labels)

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    @property
    def node_alphabet(self) -> set[str]:
        return set(self._labels)

    @property
    def edge_alphabet(self) -> set[str]:
        return {label for _, _, label, _ in self._edges}

    @property
    def self_loops(self) -> list[int]:
        return list(self._self_loops)

    def node_label(self, v: NodeId) -> str:
        return self._labels[v]

    def node_name(self, v: NodeId) -> str:
        return self._names[v]

    def node_attrs(self, v: NodeId) -> np.ndarray | None:
        return self._attrs[v]

    def edge(self, e: int) -> tuple[int, int, str, float | None]:
        return self._edges[e]

    def edges(self) -> list[tuple[int, int, str, float | None]]:
        return list(self._edges)

    def degree(self, v: NodeId) -> int:
        return len(self._adj[v])

    def adjacency(self, v: NodeId) -> list[tuple[int, int]]:
        """(neighbor, edge index) entries for v; sorted once frozen."""
        return list(self._adj[v])

    def nodes_with_label(self, label: str) -> list[int]:
        if self._frozen and self._label_nodes is not None:
            return list(self._label_nodes.get(label, []))
        return [v for v, lab in enumerate(self._labels) if lab == label]

    def has_edge(self, u: NodeId, v: NodeId) -> bool:
        if not self._frozen:
            raise RuntimeError("has_edge requires a frozen graph")
        return v in self._neighbor_sets[u]

    def neighbors(
        self,
        v: NodeId,
        edge_label: str | None = None,
        node_label: str | None = None,
    ) -> list[int]:
        """Adjacent node ids, optionally filtered by edge and node label.

        Order is deterministic (ascending id, then edge index once the
        graph is frozen). Parallel edges yield repeated entries.
        """
        if not 0 <= v < len(self._labels):
            raise IndexError(f"node id {v} out of range")
        out = []
        for nbr, edge in self._adj[v]:
            if edge_label is not None and self._edges[edge][2] != edge_label:
                continue
            if node_label is not None and self._labels[nbr] != node_label:
                continue
            out.append(nbr)
        return out

    def neighbors_by_label(self, v: NodeId, node_label: str) -> np.ndarray:
        """Cached array variant of :meth:`neighbors` for hot loops."""
        if not self._frozen:
            raise RuntimeError("neighbors_by_label requires a frozen graph")
        key = (v, node_label)
        cached = self._label_adj_cache.get(key)
        if cached is None:
            cached = np.asarray(
                self.neighbors(v, node_label=node_label), dtype=np.int64
            )
            self._label_adj_cache[key] = cached
        return cached

    def count_by_label(self) -> tuple[dict[str, int], dict[str, int]]:
        """Node and edge counts per label; totals sum to |V| and |E|."""
        node_counts: dict[str, int] = {}
        for label in self._labels:
            node_counts[label] = node_counts.get(label, 0) + 1
        edge_counts: dict[str, int] = {}
        for _, _, label, _ in self._edges:
            edge_counts[label] = edge_counts.get(label, 0) + 1
        return node_counts, edge_counts

    # -- derived graphs ---------------------------------------------------

    def induced_subgraph(self, node_ids: Iterable[NodeId]) -> "HeteroGraph":
        """Subgraph on the given nodes, re-indexed, frozen.

        Keeps all and only edges with both endpoints in the set. New ids
        follow ascending old-id order.
        """
        kept = sorted(set(node_ids))
        n = len(self._labels)
        for v in kept:
            if not 0 <= v < n:
                raise IndexError(f"node id {v} out of range")
        remap = {old: new for new, old in enumerate(kept)}
        sub = HeteroGraph()
        for old in kept:
            sub.add_node(self._labels[old], self._attrs[old], self._names[old])
        for u, v, label, weight in self._edges:
            if u in remap and v in remap:
                sub.add_edge(remap[u], remap[v], label, weight)
        return sub.freeze()

    def without_edges(self, edge_indices: Iterable[int]) -> "HeteroGraph":
        """Copy of the graph with the given edges removed, frozen."""
        drop = set(edge_indices)
        out = HeteroGraph()
        for v in range(self.n_nodes):
            out.add_node(self._labels[v], self._attrs[v], self._names[v])
        for e, (u, v, label, weight) in enumerate(self._edges):
            if e not in drop:
                out.add_edge(u, v, label, weight)
        return out.freeze()

    # -- serialization ------------------------------------------------------

    def save(self, directory: str) -> None:
        """Write ``nodes.tsv`` and ``edges.tsv`` under ``directory``."""
        os.makedirs(directory, exist_ok=True)
        with open(os.path.join(directory, _NODES_FILE), "w", encoding="utf-8") as fh:
            fh.write("id\tlabel\tname\tattrs\n")
            for v in range(self.n_nodes):
                attrs = self._attrs[v]
                field = "" if attrs is None else ",".join(repr(float(x)) for x in attrs)
                for text in (self._labels[v], self._names[v]):
                    if "\t" in text or "\n" in text:
                        raise ValueError(f"tab/newline in text field: {text!r}")
                fh.write(f"{v}\t{self._labels[v]}\t{self._names[v]}\t{field}\n")
        with open(os.path.join(directory, _EDGES_FILE), "w", encoding="utf-8") as fh:
            fh.write("src\tdst\tlabel\tweight\n")
            for u, v, label, weight in self._edges:
                field = "" if weight is None else repr(weight)
                fh.write(f"{u}\t{v}\t{label}\t{field}\n")

    @classmethod
    def load(cls, directory: str) -> "HeteroGraph":
        """Read a graph written by :meth:`save`; returns it frozen."""
        graph = cls()
        with open(os.path.join(directory, _NODES_FILE), encoding="utf-8") as fh:
            header = fh.readline()
            if header.rstrip("\n") != "id\tlabel\tname\tattrs":
                raise ValueError("unrecognized nodes.tsv header")
            for line in fh:
                ident, label, name, field = line.rstrip("\n").split("\t")
                attrs = None
                if field:
                    attrs = np.array([float(x) for x in field.split(",")])
                node = graph.add_node(label, attrs, name)
                if node != int(ident):
                    raise ValueError(f"non-contiguous node id {ident}")
        with open(os.path.join(directory, _EDGES_FILE), encoding="utf-8") as fh:
            header = fh.readline()
            if header.rstrip("\n") != "src\tdst\tlabel\tweight":
                raise ValueError("unrecognized edges.tsv header")
            for line in fh:
                src, dst, label, field = line.rstrip("\n").split("\t")
                weight = float(field) if field else None
                graph.add_edge(int(src), int(dst), label, weight)
        return graph.freeze()


def structurally_equal(a: HeteroGraph, b: HeteroGraph) -> bool:
    """True when two graphs match node-for-node and edge-for-edge."""
    if a.n_nodes != b.n_nodes or a.n_edges != b.n_edges:
        return False
    for v in range(a.n_nodes):
        if a.node_label(v) != b.node_label(v) or a.node_name(v) != b.node_name(v):
            return False
        attrs_a, attrs_b = a.node_attrs(v), b.node_attrs(v)
        if (attrs_a is None) != (attrs_b is None):
            return False
        if attrs_a is not None and not np.array_equal(attrs_a, attrs_b):
            return False
    return a.edges() == b.edges()
