"""Graph kernels and Gram-matrix machinery.

Three kernels over node-labelled (optionally attributed) graphs, all
explicit feature-map inner products and therefore symmetric positive
definite:

* ``node_pairs_rbf`` — sum of RBF values over all cross-graph node
  attribute pairs;
* ``vertex_label_histogram`` — dot product of node-label count vectors;
* ``propagation`` — label distributions diffused by neighbor averaging
  for T rounds, binned each round by a seeded random-projection hash,
  accumulating histogram dot products.

Cosine normalization k(G,H)/sqrt(k(G,G) k(H,H)) maps values into [0, 1]
with a unit diagonal. ``psd_check`` makes the validity condition
(symmetry plus positive definiteness) executable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .hetgraph import HeteroGraph

KERNEL_KINDS = ("node_pairs_rbf", "vertex_label_histogram", "propagation")


@dataclass(frozen=True)
class KernelConfig:
    kind: str = "propagation"
    rbf_sigma: float = 1.0
    iterations: int = 3
    bin_width: float = 1e-5
    seed: int = 0

    def validate(self) -> "KernelConfig":
        if self.kind not in KERNEL_KINDS:
            raise ConfigError(f"unknown kernel kind {self.kind!r}; "
                              f"choose from {KERNEL_KINDS}")
        if self.rbf_sigma <= 0:
            raise ConfigError("rbf_sigma must be positive")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.bin_width <= 0:
            raise ConfigError("bin_width must be positive")
        return self


@dataclass
class GramMatrix:
    values: np.ndarray
    row_ids: list[str]
    col_ids: list[str]
    normalized: bool

    def save(self, path: str) -> None:
        """TSV with graph ids as row/column headers, full precision."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\t" + "\t".join(self.col_ids) + "\n")
            for rid, row in zip(self.row_ids, self.values):
                fh.write(rid + "\t" + "\t".join(repr(float(x)) for x in row) + "\n")


def rbf(x, y, sigma: float) -> float:
    """exp(-||x - y||^2 / (2 sigma^2)), in (0, 1]."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    return float(np.exp(-float(np.sum((x - y) ** 2)) / (2.0 * sigma**2)))


def _attr_matrix(graph: HeteroGraph) -> np.ndarray:
    rows = []
    for v in range(graph.n_nodes):
        attrs = graph.node_attrs(v)
        if attrs is None:
            raise ValueError(
                "node without attributes; attach some first "
                "(see with_label_attributes)"
            )
        rows.append(attrs)
    matrix = np.asarray(rows, dtype=float)
    if matrix.ndim != 2:
        raise ValueError("attribute dimensions differ across nodes")
    return matrix


def with_label_attributes(graph: HeteroGraph, alphabet=None) -> HeteroGraph:
    """Copy of the graph with one-hot node-label attribute vectors.

    Adapter for attribute kernels on label-only graphs; pass a shared
    ``alphabet`` when several graphs must agree on the encoding.
    """
    if alphabet is None:
        alphabet = sorted(graph.node_alphabet)
    index = {lab: i for i, lab in enumerate(alphabet)}
    out = HeteroGraph()
    for v in range(graph.n_nodes):
        one_hot = np.zeros(len(alphabet))
        one_hot[index[graph.node_label(v)]] = 1.0
        out.add_node(graph.node_label(v), one_hot, graph.node_name(v))
    for u, v, lab, w in graph.edges():
        out.add_edge(u, v, lab, w)
    return out.freeze()


def node_pairs_kernel(g: HeteroGraph, h: HeteroGraph, sigma: float) -> float:
    """Sum of RBF values over all (node of G, node of H) attribute pairs."""
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    a = _attr_matrix(g)
    b = _attr_matrix(h)
    if a.shape[1] != b.shape[1]:
        raise ValueError("attribute dimensions differ between graphs")
    sq = (np.sum(a**2, axis=1)[:, None] + np.sum(b**2, axis=1)[None, :]
          - 2.0 * a @ b.T)
    return float(np.exp(-np.maximum(sq, 0.0) / (2.0 * sigma**2)).sum())


def _label_counts(graph: HeteroGraph, alphabet: list[str]) -> np.ndarray:
    index = {lab: i for i, lab in enumerate(alphabet)}
    counts = np.zeros(len(alphabet))
    for v in range(graph.n_nodes):
        counts[index[graph.node_label(v)]] += 1.0
    return counts


def vertex_label_histogram_kernel(g: HeteroGraph, h: HeteroGraph,
                                  alphabet=None) -> float:
    """Dot product of node-label count histograms over the union alphabet."""
    if alphabet is None:
        alphabet = sorted(g.node_alphabet | h.node_alphabet)
    return float(_label_counts(g, alphabet) @ _label_counts(h, alphabet))


def _propagation_features(graphs, config: KernelConfig, alphabet):
    """Per-graph histogram dicts for iterations 0..T.

    The same projection hash (drawn from (seed, iteration)) bins every
    graph's node states, so the kernel is an explicit inner product.
    """
    index = {lab: i for i, lab in enumerate(alphabet)}
    dim = len(alphabet)
    hashes = []
    for t in range(config.iterations + 1):
        rng = np.random.default_rng((config.seed, t))
        hashes.append((rng.normal(size=dim), float(rng.uniform(0, config.bin_width))))

    features = []
    for graph in graphs:
        state = np.zeros((graph.n_nodes, dim))
        for v in range(graph.n_nodes):
            state[v, index[graph.node_label(v)]] = 1.0
        per_iteration = []
        for t in range(config.iterations + 1):
            direction, offset = hashes[t]
            bins = np.floor((state @ direction + offset) / config.bin_width)
            hist: dict[int, float] = {}
            for b in bins:
                hist[int(b)] = hist.get(int(b), 0.0) + 1.0
            per_iteration.append(hist)
            if t == config.iterations:
                break
            new_state = state.copy()  # isolated nodes keep their state
            for v in range(graph.n_nodes):
                nbrs = graph.neighbors(v)
                if nbrs:
                    new_state[v] = state[nbrs].mean(axis=0)
            state = new_state
        features.append(per_iteration)
    return features


def _hist_dot(a: dict[int, float], b: dict[int, float]) -> float:
    if len(b) < len(a):
        a, b = b, a
    return sum(v * b.get(k, 0.0) for k, v in a.items())


def propagation_kernel(g: HeteroGraph, h: HeteroGraph, config: KernelConfig,
                       alphabet=None) -> float:
    """Diffused-label histogram kernel; deterministic given the seed."""
    config.validate()
    if alphabet is None:
        alphabet = sorted(g.node_alphabet | h.node_alphabet)
    feats = _propagation_features([g, h], config, alphabet)
    return sum(_hist_dot(fa, fb) for fa, fb in zip(feats[0], feats[1]))


def _pairwise(kind, graphs_a, graphs_b, config, alphabet):
    """Raw kernel values; exploits symmetry when the two lists coincide."""
    same = graphs_a is graphs_b
    if kind == "propagation":
        feats = _propagation_features(
            list(graphs_a) + ([] if same else list(graphs_b)), config, alphabet
        )
        feats_a = feats[:len(graphs_a)]
        feats_b = feats_a if same else feats[len(graphs_a):]
        values = np.zeros((len(graphs_a), len(graphs_b)))
        for i, fa in enumerate(feats_a):
            for j, fb in enumerate(feats_b):
                if same and j < i:
                    continue
                values[i, j] = sum(_hist_dot(x, y) for x, y in zip(fa, fb))
        if same:
            values = np.triu(values) + np.triu(values, 1).T
        return values
    if kind == "vertex_label_histogram":
        counts_a = np.stack([_label_counts(g, alphabet) for g in graphs_a])
        counts_b = counts_a if same else np.stack(
            [_label_counts(g, alphabet) for g in graphs_b]
        )
        return counts_a @ counts_b.T
    values = np.zeros((len(graphs_a), len(graphs_b)))
    for i, g in enumerate(graphs_a):
        for j, h in enumerate(graphs_b):
            if same and j < i:
                continue
            values[i, j] = node_pairs_kernel(g, h, config.rbf_sigma)
    if same:
        values = np.triu(values) + np.triu(values, 1).T
    return values


def gram_matrix(rows, cols=None, config: KernelConfig = KernelConfig(),
                normalize: bool = False, row_ids=None,
                col_ids=None) -> GramMatrix:
    """All pairwise kernel values between two graph lists.

    ``cols=None`` means rows x rows (computed as upper triangle and
    mirrored). ``normalize=True`` applies cosine normalization, giving a
    unit diagonal on the square case.
    """
    config.validate()
    rows = list(rows)
    square = cols is None
    cols_list = rows if square else list(cols)
    if not rows or not cols_list:
        raise ValueError("gram_matrix needs nonempty graph lists")
    alphabet = sorted(set().union(
        *(g.node_alphabet for g in rows), *(g.node_alphabet for g in cols_list)
    ))
    values = _pairwise(config.kind, rows, rows if square else cols_list,
                       config, alphabet)
    if normalize:
        if square:
            self_rows = np.diag(values).copy()
            self_cols = self_rows
        else:
            self_rows = np.array([
                _pairwise(config.kind, [g], [g], config, alphabet)[0, 0]
                for g in rows
            ])
            self_cols = np.array([
                _pairwise(config.kind, [g], [g], config, alphabet)[0, 0]
                for g in cols_list
            ])
        denom = np.sqrt(np.outer(self_rows, self_cols))
        values = np.where(denom > 0, values / np.where(denom > 0, denom, 1.0), 0.0)
    if row_ids is None:
        row_ids = [f"g{i}" for i in range(len(rows))]
    if col_ids is None:
        col_ids = row_ids if square else [f"h{j}" for j in range(len(cols_list))]
    return GramMatrix(values=values, row_ids=list(row_ids),
                      col_ids=list(col_ids), normalized=normalize)


def psd_check(matrix, tol: float = 1e-8,
              sym_tol: float = 1e-8) -> tuple[bool, float]:
    """(is PSD, min eigenvalue); PSD means min eig >= -tol * |trace|.

    Raises on matrices asymmetric beyond ``sym_tol`` (relative to the
    largest entry magnitude).
    """
    matrix = np.asarray(getattr(matrix, "values", matrix), dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("psd_check needs a square matrix")
    scale = max(1.0, float(np.abs(matrix).max()))
    asym = float(np.abs(matrix - matrix.T).max())
    if asym > sym_tol * scale:
        raise ValueError(f"matrix is asymmetric (max deviation {asym:.3e})")
    eigenvalues = np.linalg.eigvalsh((matrix + matrix.T) / 2.0)
    min_eig = float(eigenvalues[0])
    trace = float(np.trace(matrix))
    return min_eig >= -tol * max(abs(trace), 1e-300), min_eig
