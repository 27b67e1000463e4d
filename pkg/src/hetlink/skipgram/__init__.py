"""Skip-gram node embeddings with negative sampling, plus edge operators.

Training maximizes the log-probability of observing each walk neighbor
given the center node's embedding, with the full softmax replaced by
sampled negatives drawn from the corpus unigram distribution raised to
``noise_exponent``. The exact softmax survives as :func:`softmax_prob`
for tests and small graphs.

Two interchangeable training kernels exist: a compiled Cython extension
(used when importable) and a pure-Python reference with identical
update order and RNG stream. ``BACKEND`` names the default; pass
``backend=`` to force one.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..walks import WalkCorpus
from . import _sgns_ref

try:
    from . import _sgns_fast
except ImportError:  # extension not built; fall back to pure Python
    _sgns_fast = None

BACKEND = "compiled" if _sgns_fast is not None else "python"

EDGE_OPERATORS = ("hadamard", "average", "l1", "l2")


@dataclass(frozen=True)
class SkipGramConfig:
    window: int = 5
    negatives_per_positive: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    dim: int = 512
    seed: int = 0
    noise_exponent: float = 0.75

    def validate(self) -> "SkipGramConfig":
        for name in ("window", "negatives_per_positive", "epochs", "dim"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not 0.0 <= self.noise_exponent <= 1.0:
            raise ConfigError("noise_exponent must lie in [0, 1]")
        return self


@dataclass
class EmbeddingTable:
    """Input (the embedding map) and output (context) vectors per node."""

    dim: int
    input_vectors: np.ndarray
    output_vectors: np.ndarray | None = None
    epoch_losses: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def vector(self, node: int) -> np.ndarray:
        return self.input_vectors[node]

    def save(self, path: str) -> None:
        """Text dump: config echo as comments, one node per line."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# dim={self.dim}\n")
            for key, value in self.metadata.items():
                fh.write(f"# {key}={value}\n")
            for node, row in enumerate(self.input_vectors):
                fh.write(str(node) + " " + " ".join(repr(float(x)) for x in row) + "\n")

    @classmethod
    def load(cls, path: str) -> "EmbeddingTable":
        metadata = {}
        rows = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    metadata[key] = value
                    continue
                parts = line.split()
                if int(parts[0]) != len(rows):
                    raise ValueError("non-contiguous node ids in embedding dump")
                rows.append([float(x) for x in parts[1:]])
        table = cls(dim=int(metadata.pop("dim")), input_vectors=np.array(rows))
        table.metadata = metadata
        return table


def softmax_prob(u: int, n: int, table: EmbeddingTable) -> float:
    """Exact softmax P(n | u) over all nodes; test oracle, O(|V| d)."""
    dots = table.input_vectors @ table.input_vectors[u]
    dots -= dots.max()
    exp = np.exp(dots)
    return float(exp[n] / exp.sum())


def _sigmoid_scalar(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return float(e / (1.0 + e))


def _log_sigmoid_scalar(x: float) -> float:
    return float(-np.logaddexp(0.0, -x))


def sgns_loss_and_grads(center: int, context: int, negatives: list[int],
                        table: EmbeddingTable):
    """Negative-sampling loss for one pair and its sparse gradients.

    Returns ``(loss, grads)`` where ``grads`` maps ``("in", node)`` /
    ``("out", node)`` to dense gradient rows; only participating rows
    appear.
    """
    if context in negatives:
        raise ValueError("negatives must exclude the context node")
    w_in = table.input_vectors
    w_out = table.output_vectors
    center_row = w_in[center]
    grads: dict[tuple[str, int], np.ndarray] = {}

    f_pos = float(center_row @ w_out[context])
    loss = -_log_sigmoid_scalar(f_pos)
    g_pos = _sigmoid_scalar(f_pos) - 1.0  # d loss / d f_pos
    grad_center = g_pos * w_out[context]
    grads[("out", context)] = g_pos * center_row

    for neg in negatives:
        f_neg = float(center_row @ w_out[neg])
        loss += -_log_sigmoid_scalar(-f_neg)
        g_neg = _sigmoid_scalar(f_neg)
        grad_center = grad_center + g_neg * w_out[neg]
        key = ("out", neg)
        grads[key] = grads.get(key, 0.0) + g_neg * center_row
    grads[("in", center)] = grad_center
    return loss, grads


def _pack_corpus(walks: list[np.ndarray]):
    offsets = np.zeros(len(walks) + 1, dtype=np.int64)
    for i, walk in enumerate(walks):
        offsets[i + 1] = offsets[i] + len(walk)
    data = np.zeros(int(offsets[-1]), dtype=np.int32)
    for i, walk in enumerate(walks):
        data[offsets[i]:offsets[i + 1]] = walk
    return data, offsets


def _pair_count(offsets: np.ndarray, window: int) -> int:
    total = 0
    for length in np.diff(offsets):
        length = int(length)
        for i in range(length):
            total += min(length - 1, i + window) - max(0, i - window)
    return total


def _noise_cdf(data: np.ndarray, n_nodes: int, exponent: float) -> np.ndarray:
    counts = np.bincount(data, minlength=n_nodes).astype(np.float64)
    weights = counts**exponent
    cdf = np.cumsum(weights / weights.sum())
    cdf[-1] = 1.0
    return cdf


def train_embeddings(corpus: WalkCorpus, config: SkipGramConfig,
                     backend: str | None = None,
                     workers: int = 1) -> EmbeddingTable:
    """SGD over all in-window pairs of the corpus; returns the table.

    Deterministic given the seed with ``workers=1``. With more workers
    the kernel runs lock-free over shared tables (walks sharded
    round-robin); reproducibility is waived and recorded in the table
    metadata.
    """
    config.validate()
    if not corpus.walks:
        raise ValueError("cannot train embeddings on an empty corpus")
    if backend is None:
        backend = BACKEND
    if backend == "compiled" and _sgns_fast is None:
        raise ConfigError("compiled kernel requested but not built")
    if backend not in ("compiled", "python"):
        raise ConfigError(f"unknown backend {backend!r}")
    kernel = _sgns_fast if backend == "compiled" else _sgns_ref

    n_nodes = len(corpus.node_labels)
    rng = np.random.default_rng(config.seed)
    w_in = (rng.random((n_nodes, config.dim)) - 0.5) / config.dim
    w_out = (rng.random((n_nodes, config.dim)) - 0.5) / config.dim

    data, offsets = _pack_corpus(corpus.walks)
    table = EmbeddingTable(
        dim=config.dim, input_vectors=w_in, output_vectors=w_out,
        metadata={
            "seed": config.seed, "window": config.window,
            "negatives": config.negatives_per_positive, "epochs": config.epochs,
            "learning_rate": config.learning_rate,
            "noise_exponent": config.noise_exponent,
            "backend": backend, "workers": workers,
            "reproducible": workers == 1,
        },
    )
    total_pairs = _pair_count(offsets, config.window)
    if total_pairs == 0:
        table.epoch_losses = np.zeros(config.epochs)
        return table
    cdf = _noise_cdf(data, n_nodes, config.noise_exponent)
    seed64 = config.seed & 0xFFFFFFFFFFFFFFFF

    if workers <= 1:
        table.epoch_losses = kernel.train_sgns(
            data, offsets, w_in, w_out, cdf, config.window,
            config.negatives_per_positive, config.epochs,
            config.learning_rate, total_pairs, seed64,
        )
        return table

    # lock-free sharded training: each worker owns a walk shard and its
    # own RNG stream; row updates race by design
    shards = [list(range(i, len(corpus.walks), workers)) for i in range(workers)]
    losses: list[np.ndarray | None] = [None] * workers

    def run(shard_index: int, walk_ids: list[int]) -> None:
        sub_data, sub_offsets = _pack_corpus([corpus.walks[i] for i in walk_ids])
        pairs = _pair_count(sub_offsets, config.window)
        if pairs == 0:
            losses[shard_index] = np.zeros(config.epochs)
            return
        losses[shard_index] = kernel.train_sgns(
            sub_data, sub_offsets, w_in, w_out, cdf, config.window,
            config.negatives_per_positive, config.epochs,
            config.learning_rate, pairs, (seed64 + shard_index) & 0xFFFFFFFFFFFFFFFF,
        )

    threads = [
        threading.Thread(target=run, args=(i, ids)) for i, ids in enumerate(shards)
    ]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    table.epoch_losses = np.mean([l for l in losses if l is not None], axis=0)
    return table


def embed_edge(a: int, b: int, op: str, table: EmbeddingTable) -> np.ndarray:
    """Combine two node embeddings into one edge feature vector."""
    fa, fb = table.input_vectors[a], table.input_vectors[b]
    if op == "hadamard":
        return fa * fb
    if op == "average":
        return (fa + fb) / 2.0
    if op == "l1":
        return np.abs(fa - fb)
    if op == "l2":
        return (fa - fb) ** 2
    raise ConfigError(f"unknown edge operator {op!r}; choose from {EDGE_OPERATORS}")
