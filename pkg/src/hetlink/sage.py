"""Inductive relational GNN over the bi-nodal trial/adverse-event graph.

Two-layer mean-aggregation architecture with one weight matrix per
(layer, source label) relation: layer input is the concatenation of a
node's previous representation with the dropout-masked mean of its
neighbors' previous representations, followed by ReLU and row-wise L2
normalization. Aggregation neighborhoods are the edges with nonzero (or
absent) weight; in the bi-nodal graph those are exactly the observed
trial-AE links, so representations of unseen nodes are computable from
attributes plus attached edges without retraining.

A link-classification head scores node pairs:
sigmoid(w . (z_a * z_b) + b). Training is mini-batched Adam on binary
edge weights; the unsupervised neighborhood objective is kept as an
alternative (:func:`unsupervised_loss`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .hetgraph import HeteroGraph


# -- Adam -----------------------------------------------------------------


@dataclass
class AdamState:
    t: int
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    alpha: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(params: dict[str, np.ndarray], alpha=0.001, beta1=0.9,
              beta2=0.999, eps=1e-8) -> AdamState:
    zeros = {key: np.zeros_like(value) for key, value in params.items()}
    return AdamState(t=0, m=zeros,
                     v={key: np.zeros_like(value) for key, value in params.items()},
                     alpha=alpha, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState):
    """One bias-corrected Adam update; pure (inputs untouched)."""
    t = state.t + 1
    new_params, new_m, new_v = {}, {}, {}
    for key, value in params.items():
        grad = grads[key]
        if grad.shape != value.shape:
            raise ValueError(f"gradient shape {grad.shape} != param shape "
                             f"{value.shape} for {key!r}")
        m = state.beta1 * state.m[key] + (1 - state.beta1) * grad
        v = state.beta2 * state.v[key] + (1 - state.beta2) * grad**2
        m_hat = m / (1 - state.beta1**t)
        v_hat = v / (1 - state.beta2**t)
        new_params[key] = value - state.alpha * m_hat / (np.sqrt(v_hat) + state.eps)
        new_m[key], new_v[key] = m, v
    return new_params, AdamState(t=t, m=new_m, v=new_v, alpha=state.alpha,
                                 beta1=state.beta1, beta2=state.beta2,
                                 eps=state.eps)


# -- primitive ops ---------------------------------------------------------


def _sigmoid(x):
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                    np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def mean_aggregate(neighbor_states, dropout_p: float,
                   rng: np.random.Generator | None = None,
                   dim: int | None = None) -> np.ndarray:
    """Elementwise mean of inverted-dropout-masked neighbor vectors.

    Empty neighborhoods aggregate to the zero vector (``dim`` required
    then). With p = 0 this is the exact mean.
    """
    states = [np.asarray(s, dtype=float) for s in neighbor_states]
    if not states:
        if dim is None:
            raise ValueError("dim is required for an empty neighborhood")
        return np.zeros(dim)
    stacked = np.stack(states)
    if stacked.ndim != 2:
        raise ValueError("neighbor states must be vectors")
    if len({s.size for s in states}) != 1:
        raise ValueError("neighbor state dimensions differ")
    if dropout_p > 0.0:
        if rng is None:
            raise ValueError("dropout needs an rng")
        keep = rng.random(stacked.shape) >= dropout_p
        stacked = stacked * keep / (1.0 - dropout_p)
    return stacked.mean(axis=0)


def link_head(z_a: np.ndarray, z_b: np.ndarray, head_w: np.ndarray,
              head_b: float) -> float:
    """Edge probability: sigmoid(w . (z_a * z_b) + b)."""
    return float(_sigmoid(np.asarray(head_w @ (z_a * z_b) + head_b)))


def unsupervised_loss(z_u, z_pos, z_negatives, Q: int) -> float:
    """Neighborhood objective: pull a co-walk node, push sampled negatives."""
    loss, _, _, _ = unsupervised_loss_grads(z_u, z_pos, z_negatives, Q)
    return loss


def unsupervised_loss_grads(z_u, z_pos, z_negatives, Q: int):
    """Loss plus gradients w.r.t. each representation."""
    if Q < 1:
        raise ValueError("Q must be >= 1")
    if not z_negatives:
        raise ValueError("at least one negative sample is required")
    z_u = np.asarray(z_u, dtype=float)
    z_pos = np.asarray(z_pos, dtype=float)
    f = float(z_u @ z_pos)
    s = float(_sigmoid(np.asarray(f)))
    loss = -float(np.log(s))
    d_u = (s - 1.0) * z_pos
    d_pos = (s - 1.0) * z_u
    scale = Q / len(z_negatives)
    d_negs = []
    for z_n in z_negatives:
        z_n = np.asarray(z_n, dtype=float)
        g = float(z_u @ z_n)
        s_n = float(_sigmoid(np.asarray(g)))
        loss += -scale * float(np.log(1.0 - s_n))
        d_u = d_u + scale * s_n * z_n
        d_negs.append(scale * s_n * z_u)
    return loss, d_u, d_pos, d_negs


# -- parameters --------------------------------------------------------------


@dataclass
class SageParams:
    layer_dims: tuple[int, ...]
    input_dims: dict[str, int]
    weights: dict[tuple[int, str], np.ndarray]
    head_w: np.ndarray
    head_b: float
    dropout: float
    epoch_losses: np.ndarray | None = None

    @property
    def depth(self) -> int:
        return len(self.layer_dims)


def init_sage_params(graph: HeteroGraph, layer_dims=(128, 128), dropout=0.1,
                     seed: int = 0) -> SageParams:
    """Glorot-uniform relation weights for a two-label attributed graph."""
    if not 0.0 <= dropout < 1.0:
        raise ConfigError("dropout must lie in [0, 1)")
    labels = sorted(graph.node_alphabet)
    if len(labels) != 2:
        raise ConfigError(f"expected exactly two node labels, got {labels}")
    input_dims = {}
    for label in labels:
        node = graph.nodes_with_label(label)[0]
        attrs = graph.node_attrs(node)
        if attrs is None:
            raise ValueError(f"nodes labelled {label!r} carry no attributes")
        input_dims[label] = attrs.size
    other = {labels[0]: labels[1], labels[1]: labels[0]}
    rng = np.random.default_rng(seed)
    weights = {}
    prev = dict(input_dims)
    for i, out_dim in enumerate(layer_dims, start=1):
        new_prev = {}
        for label in labels:
            in_dim = prev[label] + prev[other[label]]
            bound = np.sqrt(6.0 / (in_dim + out_dim))
            weights[(i, label)] = rng.uniform(-bound, bound, size=(in_dim, out_dim))
            new_prev[label] = out_dim
        prev = new_prev
    head_w = rng.normal(scale=0.1, size=layer_dims[-1])
    return SageParams(layer_dims=tuple(layer_dims), input_dims=input_dims,
                      weights=weights, head_w=head_w, head_b=0.0,
                      dropout=dropout)


# -- graph indexing -----------------------------------------------------------


@dataclass
class _GraphIndex:
    labels: tuple[str, str]
    other: dict[str, str]
    attrs: dict[str, np.ndarray]          # label -> (n_label, d) matrix
    row_of: np.ndarray                    # node id -> row in its label matrix
    label_of: list[str]
    nodes_of: dict[str, np.ndarray]       # label -> node ids (ascending)
    adj: list[np.ndarray]                 # node id -> linked neighbor ids


def index_graph(graph: HeteroGraph) -> _GraphIndex:
    """Dense per-label views; aggregation edges are those with weight > 0
    (or no weight at all)."""
    labels = tuple(sorted(graph.node_alphabet))
    if len(labels) != 2:
        raise ConfigError(f"expected exactly two node labels, got {labels}")
    other = {labels[0]: labels[1], labels[1]: labels[0]}
    nodes_of = {lab: np.asarray(graph.nodes_with_label(lab)) for lab in labels}
    row_of = np.zeros(graph.n_nodes, dtype=np.int64)
    label_of = [graph.node_label(v) for v in range(graph.n_nodes)]
    attrs = {}
    for lab in labels:
        rows = []
        for row, node in enumerate(nodes_of[lab]):
            vec = graph.node_attrs(int(node))
            if vec is None:
                raise ValueError(f"node {node} has no attribute vector")
            rows.append(vec)
            row_of[node] = row
        attrs[lab] = np.asarray(rows, dtype=float)
    linked: list[list[int]] = [[] for _ in range(graph.n_nodes)]
    for u, v, _, weight in graph.edges():
        if weight is None or weight > 0:
            linked[u].append(v)
            linked[v].append(u)
    adj = [np.asarray(sorted(nbrs), dtype=np.int64) for nbrs in linked]
    return _GraphIndex(labels=labels, other=other, attrs=attrs, row_of=row_of,
                       label_of=label_of, nodes_of=nodes_of, adj=adj)


# -- forward / backward ----------------------------------------------------


def _group_by_label(index: _GraphIndex, nodes) -> dict[str, np.ndarray]:
    groups: dict[str, list[int]] = {lab: [] for lab in index.labels}
    for node in nodes:
        groups[index.label_of[int(node)]].append(int(node))
    return {lab: np.asarray(sorted(set(ids)), dtype=np.int64)
            for lab, ids in groups.items()}


class _Tape:
    """Cached intermediates of one forward pass, for backprop."""

    def __init__(self):
        self.levels: list[dict[str, dict]] = []
        self.need: list[dict[str, np.ndarray]] = []
        self.h: list[dict[str, np.ndarray]] = []


def _forward(index: _GraphIndex, params: SageParams, batch_nodes,
             train: bool, rng: np.random.Generator | None,
             fanouts) -> tuple[np.ndarray, _Tape]:
    batch_nodes = np.asarray(batch_nodes, dtype=np.int64)
    k = params.depth
    if fanouts is not None and len(fanouts) != k:
        raise ConfigError("fanouts must list one count per layer")
    dropout = params.dropout if train else 0.0
    if (train and (dropout > 0 or fanouts is not None)) and rng is None:
        raise ValueError("training-mode forward needs an rng")

    # need[i]: nodes whose level-i representation is required
    need: list[dict[str, np.ndarray]] = [None] * (k + 1)
    need[k] = _group_by_label(index, batch_nodes)
    samples: list[dict[str, list[np.ndarray]]] = [None] * (k + 1)
    for i in range(k, 0, -1):
        lower: set[int] = set()
        samples[i] = {}
        for lab in index.labels:
            per_node = []
            for node in need[i][lab]:
                nbrs = index.adj[int(node)]
                if fanouts is not None and nbrs.size > 0:
                    f = fanouts[i - 1]
                    nbrs = nbrs[rng.integers(0, nbrs.size, size=f)]
                per_node.append(nbrs)
                lower.update(int(x) for x in nbrs)
            samples[i][lab] = per_node
            lower.update(int(x) for x in need[i][lab])
        need[i - 1] = _group_by_label(index, sorted(lower))

    tape = _Tape()
    tape.need = need

    # level 0: raw attributes
    h: list[dict[str, np.ndarray]] = [None] * (k + 1)
    h[0] = {
        lab: index.attrs[lab][index.row_of[need[0][lab]]]
        if need[0][lab].size else np.zeros((0, params.input_dims[lab]))
        for lab in index.labels
    }
    level_row = [
        {lab: {int(node): r for r, node in enumerate(need[i][lab])}
         for lab in index.labels}
        for i in range(k + 1)
    ]

    for i in range(1, k + 1):
        h[i] = {}
        tape.levels.append({})
        for lab in index.labels:
            nodes = need[i][lab]
            other = index.other[lab]
            n = nodes.size
            w = params.weights[(i, lab)]
            d_prev_other = h[i - 1][other].shape[1]
            # flatten ragged neighbor samples
            flat_rows = []
            offsets = np.zeros(n + 1, dtype=np.int64)
            for r, nbrs in enumerate(samples[i][lab]):
                flat_rows.extend(level_row[i - 1][other][int(x)] for x in nbrs)
                offsets[r + 1] = offsets[r] + len(nbrs)
            flat_rows = np.asarray(flat_rows, dtype=np.int64)
            counts = np.diff(offsets)
            gathered = (h[i - 1][other][flat_rows]
                        if flat_rows.size else np.zeros((0, d_prev_other)))
            if dropout > 0.0 and gathered.size:
                keep = rng.random(gathered.shape) >= dropout
                scale = keep / (1.0 - dropout)
            else:
                scale = np.ones_like(gathered)
            masked = gathered * scale
            agg = np.zeros((n, d_prev_other))
            if flat_rows.size:
                seg = np.repeat(np.arange(n), counts)
                np.add.at(agg, seg, masked)
                nonzero = counts > 0
                agg[nonzero] /= counts[nonzero, None]
            self_rows = np.asarray(
                [level_row[i - 1][lab][int(node)] for node in nodes], dtype=np.int64
            )
            prev_self = (h[i - 1][lab][self_rows]
                         if n else np.zeros((0, h[i - 1][lab].shape[1])))
            concat = np.concatenate([prev_self, agg], axis=1)
            pre = concat @ w
            act = np.maximum(pre, 0.0)
            norms = np.linalg.norm(act, axis=1)
            safe = np.where(norms > 0, norms, 1.0)
            h[i][lab] = act / safe[:, None]
            tape.levels[i - 1][lab] = {
                "nodes": nodes, "self_rows": self_rows, "flat_rows": flat_rows,
                "counts": counts, "scale": scale, "concat": concat,
                "pre": pre, "act": act, "norms": norms,
            }
    tape.h = h
    out_rows = np.asarray(
        [level_row[k][index.label_of[int(v)]][int(v)] for v in batch_nodes],
        dtype=np.int64,
    )
    out_labels = [index.label_of[int(v)] for v in batch_nodes]
    z = np.zeros((batch_nodes.size, params.layer_dims[-1] if k else 0))
    if k == 0:
        # degenerate depth: representations are the raw attributes; only
        # meaningful when both labels share one dimension
        z = np.stack([h[0][lab][out_rows[j]] for j, lab in enumerate(out_labels)])
    else:
        for j, lab in enumerate(out_labels):
            z[j] = h[k][lab][out_rows[j]]
    tape.out_rows = out_rows
    tape.out_labels = out_labels
    return z, tape


def _backward(index: _GraphIndex, params: SageParams, tape: _Tape,
              d_z: np.ndarray) -> dict[tuple[int, str], np.ndarray]:
    k = params.depth
    d_h: list[dict[str, np.ndarray]] = [
        {lab: np.zeros_like(tape.h[i][lab]) for lab in index.labels}
        for i in range(k + 1)
    ]
    for j, lab in enumerate(tape.out_labels):
        d_h[k][lab][tape.out_rows[j]] += d_z[j]

    d_w = {key: np.zeros_like(value) for key, value in params.weights.items()}
    for i in range(k, 0, -1):
        for lab in index.labels:
            cache = tape.levels[i - 1][lab]
            other = index.other[lab]
            d_out = d_h[i][lab]
            if d_out.size == 0:
                continue
            act, norms, pre = cache["act"], cache["norms"], cache["pre"]
            # d/dact of act/||act||: (I - h h^T)/||act||, rows with 0 norm pass 0
            safe = np.where(norms > 0, norms, 1.0)
            h_norm = act / safe[:, None]
            inner = np.sum(d_out * h_norm, axis=1, keepdims=True)
            d_act = (d_out - h_norm * inner) / safe[:, None]
            d_act[norms == 0] = 0.0
            d_pre = d_act * (pre > 0)
            d_w[(i, lab)] += cache["concat"].T @ d_pre
            d_concat = d_pre @ params.weights[(i, lab)].T
            d_self_dim = tape.h[i - 1][lab].shape[1]
            d_self = d_concat[:, :d_self_dim]
            d_agg = d_concat[:, d_self_dim:]
            np.add.at(d_h[i - 1][lab], cache["self_rows"], d_self)
            flat_rows, counts = cache["flat_rows"], cache["counts"]
            if flat_rows.size:
                seg = np.repeat(np.arange(counts.size), counts)
                inv = np.zeros(counts.size)
                nonzero = counts > 0
                inv[nonzero] = 1.0 / counts[nonzero]
                contrib = d_agg[seg] * inv[seg, None] * cache["scale"]
                np.add.at(d_h[i - 1][other], flat_rows, contrib)
    return d_w


def sage_forward(graph: HeteroGraph, batch_nodes, params: SageParams,
                 mode: str = "eval", rng: np.random.Generator | None = None,
                 fanouts=None, index: _GraphIndex | None = None) -> np.ndarray:
    """Vector representations for the batch (row-aligned).

    ``mode='eval'`` disables dropout and neighborhood sampling entirely;
    ``mode='train'`` applies both (pass ``fanouts`` to subsample).
    """
    if mode not in ("train", "eval"):
        raise ConfigError(f"mode must be 'train' or 'eval', got {mode!r}")
    if index is None:
        index = index_graph(graph)
    z, _ = _forward(index, params, batch_nodes, train=(mode == "train"),
                    rng=rng, fanouts=fanouts if mode == "train" else None)
    return z


# -- training ----------------------------------------------------------------


@dataclass(frozen=True)
class SageTrainConfig:
    layer_dims: tuple[int, ...] = (128, 128)
    fanouts: tuple[int, ...] = (10, 5)
    dropout: float = 0.1
    batch_size: int = 64
    learning_rate: float = 0.001
    seed: int = 0

    def validate(self) -> "SageTrainConfig":
        if len(self.fanouts) != len(self.layer_dims):
            raise ConfigError("fanouts must list one count per layer")
        if any(d <= 0 for d in self.layer_dims) or any(f <= 0 for f in self.fanouts):
            raise ConfigError("layer dims and fanouts must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")
        if self.batch_size <= 0 or self.learning_rate <= 0:
            raise ConfigError("batch_size and learning_rate must be positive")
        return self


def _flatten_params(params: SageParams) -> dict[str, np.ndarray]:
    flat = {f"W:{i}:{lab}": w for (i, lab), w in params.weights.items()}
    flat["head_w"] = params.head_w
    flat["head_b"] = np.asarray([params.head_b])
    return flat


def _unflatten_params(flat: dict[str, np.ndarray], template: SageParams) -> SageParams:
    weights = {}
    for (i, lab) in template.weights:
        weights[(i, lab)] = flat[f"W:{i}:{lab}"]
    return SageParams(layer_dims=template.layer_dims,
                      input_dims=template.input_dims, weights=weights,
                      head_w=flat["head_w"], head_b=float(flat["head_b"][0]),
                      dropout=template.dropout,
                      epoch_losses=template.epoch_losses)


def train_hinsage(graph: HeteroGraph, train_edges, epochs: int = 20,
                  config: SageTrainConfig = SageTrainConfig()) -> SageParams:
    """Supervised link training on (node, node, 0/1 weight) triples."""
    config.validate()
    edges = [(int(u), int(v), float(w)) for u, v, w in train_edges]
    if not edges:
        raise ValueError("training needs at least one labelled edge")
    index = index_graph(graph)
    params = init_sage_params(graph, config.layer_dims, config.dropout,
                              seed=config.seed)
    flat = _flatten_params(params)
    state = init_adam(flat, alpha=config.learning_rate)
    rng = np.random.default_rng((config.seed, 0xC0FFEE))

    u_ids = np.asarray([e[0] for e in edges])
    v_ids = np.asarray([e[1] for e in edges])
    y = np.asarray([e[2] for e in edges])
    n = len(edges)
    epoch_losses = np.zeros(epochs)
    for epoch in range(epochs):
        perm = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, config.batch_size):
            pick = perm[lo:lo + config.batch_size]
            batch_u, batch_v, batch_y = u_ids[pick], v_ids[pick], y[pick]
            params = _unflatten_params(flat, params)
            nodes = np.concatenate([batch_u, batch_v])
            z, tape = _forward(index, params, nodes, train=True, rng=rng,
                               fanouts=config.fanouts)
            b = pick.size
            z_u, z_v = z[:b], z[b:]
            had = z_u * z_v
            logits = had @ params.head_w + params.head_b
            p = _sigmoid(logits)
            eps = 1e-12
            total += float(np.sum(-batch_y * np.log(p + eps)
                                  - (1 - batch_y) * np.log(1 - p + eps)))
            d_logit = (p - batch_y) / b
            grads = {key: np.zeros_like(val) for key, val in flat.items()}
            grads["head_w"] = had.T @ d_logit
            grads["head_b"] = np.asarray([float(np.sum(d_logit))])
            d_had = d_logit[:, None] * params.head_w[None, :]
            d_z = np.concatenate([d_had * z_v, d_had * z_u])
            d_w = _backward(index, params, tape, d_z)
            for key, val in d_w.items():
                grads[f"W:{key[0]}:{key[1]}"] = val
            flat, state = adam_step(flat, grads, state)
        epoch_losses[epoch] = total / n
    params = _unflatten_params(flat, params)
    params.epoch_losses = epoch_losses
    return params


def hinsage_scores(graph: HeteroGraph, params: SageParams, pairs,
                   index: _GraphIndex | None = None) -> np.ndarray:
    """Link-head probabilities for (u, v) pairs, eval mode."""
    pairs = list(pairs)
    if index is None:
        index = index_graph(graph)
    nodes = np.asarray([u for u, _ in pairs] + [v for _, v in pairs])
    z = sage_forward(graph, nodes, params, mode="eval", index=index)
    b = len(pairs)
    had = z[:b] * z[b:]
    return _sigmoid(had @ params.head_w + params.head_b)


# -- checkpoints --------------------------------------------------------------


def save_params(params: SageParams, path: str) -> None:
    """Text checkpoint: shape header plus flat decimal dumps."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# layer_dims={','.join(str(d) for d in params.layer_dims)}\n")
        fh.write(f"# dropout={params.dropout!r}\n")
        labels = sorted({lab for _, lab in params.weights})
        fh.write(f"# labels={'|'.join(labels)}\n")
        dims = "|".join(str(params.input_dims[lab]) for lab in labels)
        fh.write(f"# input_dims={dims}\n")
        for (i, lab), w in sorted(params.weights.items()):
            fh.write(f"W {i} {lab}\t{w.shape[0]} {w.shape[1]}\n")
            for row in w:
                fh.write(" ".join(repr(float(x)) for x in row) + "\n")
        fh.write(f"head_w\t{params.head_w.size}\n")
        fh.write(" ".join(repr(float(x)) for x in params.head_w) + "\n")
        fh.write(f"head_b\t{params.head_b!r}\n")


def load_params(path: str) -> SageParams:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    meta = {}
    pos = 0
    while pos < len(lines) and lines[pos].startswith("#"):
        key, _, value = lines[pos][1:].strip().partition("=")
        meta[key] = value
        pos += 1
    layer_dims = tuple(int(x) for x in meta["layer_dims"].split(","))
    labels = meta["labels"].split("|")
    input_dims = {lab: int(d) for lab, d in
                  zip(labels, meta["input_dims"].split("|"))}
    weights = {}
    head_w = None
    head_b = 0.0
    while pos < len(lines):
        header = lines[pos]
        if header.startswith("W "):
            name, shape = header.split("\t")
            _, i, lab = name.split(" ", 2)
            rows, _ = (int(x) for x in shape.split())
            block = lines[pos + 1:pos + 1 + rows]
            weights[(int(i), lab)] = np.array(
                [[float(x) for x in line.split()] for line in block]
            )
            pos += 1 + rows
        elif header.startswith("head_w"):
            head_w = np.array([float(x) for x in lines[pos + 1].split()])
            pos += 2
        elif header.startswith("head_b"):
            head_b = float(header.split("\t")[1])
            pos += 1
        else:
            raise ValueError(f"unrecognized checkpoint line: {header!r}")
    return SageParams(layer_dims=layer_dims, input_dims=input_dims,
                      weights=weights, head_w=head_w, head_b=head_b,
                      dropout=float(meta["dropout"]))
