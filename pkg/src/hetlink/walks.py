"""Metapath-constrained, second-order-biased random walks.

A metapath is an ordered node-label sequence starting at an anchor
label. Walks longer than the metapath cycle through it, dropping the
repeated anchor at each junction: with labels ``m[0..n-1]`` the node at
walk position ``j`` must carry label ``m[j mod (n-1)]``. Step
probabilities follow the usual return/in-out bias: unnormalised weight
1/p to step back to the previous node, 1 to a node adjacent to it, and
1/q otherwise; p = q = 1 reduces to uniform metapath walks.

Walks that reach a node with no label-conforming neighbor terminate
early rather than resampling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .hetgraph import HeteroGraph

# published metapath lists use alternate names for two label families
LABEL_SYNONYMS = {
    "Side Effect": "Adverse Event",
    "Disease": "Condition",
    "Specific Disease": "Specific Condition",
}

_SEED_MASK = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class MetaPathSpec:
    """Ordered node-label sequence; the first label anchors the walk."""

    labels: tuple[str, ...]

    def __init__(self, labels):
        canonical = tuple(LABEL_SYNONYMS.get(lab, lab) for lab in labels)
        if len(canonical) < 2:
            raise ConfigError("a metapath needs at least two labels")
        object.__setattr__(self, "labels", canonical)

    @property
    def anchor(self) -> str:
        return self.labels[0]

    def label_at(self, position: int) -> str:
        """Required node label at a walk position, under the cycling rule."""
        return self.labels[position % (len(self.labels) - 1)]

    def is_connectable(self, graph: HeteroGraph) -> bool:
        """True when every consecutive label pair has >= 1 edge in the graph."""
        pairs = set()
        for u, v, _, _ in graph.edges():
            a, b = graph.node_label(u), graph.node_label(v)
            pairs.add((a, b))
            pairs.add((b, a))
        steps = [
            (self.label_at(i), self.label_at(i + 1)) for i in range(len(self.labels) - 1)
        ]
        return all(step in pairs for step in steps)


# the 16 metapaths evaluated in the source experiments
DEFAULT_METAPATHS = [
    MetaPathSpec(p)
    for p in [
        ["Clinical Trial", "Side Effect", "Clinical Trial"],
        ["Clinical Trial", "Specific Drug", "Clinical Trial"],
        ["Clinical Trial", "Drug", "Specific Drug", "Clinical Trial"],
        ["Clinical Trial", "Specific Drug", "Drug", "Clinical Trial"],
        ["Clinical Trial", "Specific Disease", "Clinical Trial"],
        ["Clinical Trial", "Disease", "Specific Disease", "Clinical Trial"],
        ["Clinical Trial", "Specific Disease", "Disease", "Clinical Trial"],
        ["Drug", "Specific Drug", "Drug"],
        ["Specific Drug", "Drug", "Specific Drug"],
        ["Disease", "Specific Disease", "Disease"],
        ["Specific Disease", "Disease", "Specific Disease"],
        ["Drug", "Disease", "Drug"],
        ["Disease", "Drug", "Disease"],
        ["Specific Drug", "Disease", "Specific Drug"],
        ["Specific Disease", "Drug", "Specific Disease"],
        ["Side Effect", "Clinical Trial", "Side Effect"],
    ]
]


@dataclass(frozen=True)
class WalkConfig:
    walk_length: int = 200
    walks_per_node: int = 1
    p: float = 1.0
    q: float = 1.0
    seed: int = 0

    def validate(self) -> "WalkConfig":
        if self.walk_length <= 0 or self.walks_per_node <= 0:
            raise ConfigError("walk_length and walks_per_node must be positive")
        if self.p <= 0 or self.q <= 0:
            raise ConfigError("p and q must be positive")
        return self


@dataclass
class WalkCorpus:
    """Generated walks plus enough context to audit them."""

    walks: list[np.ndarray]
    metapath_indices: list[int]
    node_labels: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.walks)

    def label_sequences(self) -> list[list[str]]:
        return [[self.node_labels[v] for v in walk] for walk in self.walks]

    def save(self, path: str) -> None:
        """One walk per line, space-separated node ids."""
        with open(path, "w", encoding="utf-8") as fh:
            for walk in self.walks:
                fh.write(" ".join(str(int(v)) for v in walk) + "\n")

    @staticmethod
    def load(path: str, graph: HeteroGraph) -> "WalkCorpus":
        walks = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                walks.append(np.array([int(tok) for tok in line.split()], dtype=np.int64))
        labels = tuple(graph.node_label(v) for v in range(graph.n_nodes))
        return WalkCorpus(walks=walks, metapath_indices=[-1] * len(walks),
                          node_labels=labels)


def parse_metapaths(path: str) -> list[MetaPathSpec]:
    """Read metapaths from a file: one per line, comma-separated labels."""
    specs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            specs.append(MetaPathSpec([lab.strip() for lab in stripped.split(",")]))
    if not specs:
        raise ConfigError(f"no metapaths in {path}")
    return specs


def next_step_distribution(graph: HeteroGraph, prev: int | None, curr: int,
                           allowed_label: str, config: WalkConfig):
    """Candidates and transition probabilities for one walk step.

    Returns ``(candidates, probabilities)``; both empty when the walk
    must terminate. The first step (no previous node) is uniform.
    """
    candidates = graph.neighbors_by_label(curr, allowed_label)
    if candidates.size == 0:
        return candidates, np.empty(0)
    if prev is None or (config.p == 1.0 and config.q == 1.0):
        probs = np.full(candidates.size, 1.0 / candidates.size)
        return candidates, probs
    weights = np.empty(candidates.size)
    for i, cand in enumerate(candidates):
        if cand == prev:
            weights[i] = 1.0 / config.p
        elif graph.has_edge(int(cand), prev):
            weights[i] = 1.0
        else:
            weights[i] = 1.0 / config.q
    return candidates, weights / weights.sum()


def metapath_walk(graph: HeteroGraph, start: int, metapath: MetaPathSpec,
                  config: WalkConfig, rng: np.random.Generator) -> np.ndarray:
    """One walk from ``start``; terminates early at dead ends."""
    if graph.node_label(start) != metapath.anchor:
        raise ValueError(
            f"start node has label {graph.node_label(start)!r}, "
            f"metapath anchor is {metapath.anchor!r}"
        )
    uniform = config.p == 1.0 and config.q == 1.0
    walk = [start]
    prev: int | None = None
    curr = start
    for position in range(1, config.walk_length):
        allowed = metapath.label_at(position)
        if uniform:
            candidates = graph.neighbors_by_label(curr, allowed)
            if candidates.size == 0:
                break
            nxt = int(candidates[rng.integers(candidates.size)])
        else:
            candidates, probs = next_step_distribution(graph, prev, curr, allowed, config)
            if candidates.size == 0:
                break
            nxt = int(candidates[rng.choice(candidates.size, p=probs)])
        walk.append(nxt)
        prev, curr = curr, nxt
    return np.asarray(walk, dtype=np.int64)


def _walk_rng(seed: int, metapath_index: int, node: int) -> np.random.Generator:
    # one stream per (metapath, start node) task so parallel fan-out of
    # corpus generation cannot change the corpus
    return np.random.default_rng((seed & _SEED_MASK, metapath_index, node))


def generate_corpus(graph: HeteroGraph, metapaths: list[MetaPathSpec],
                    config: WalkConfig) -> WalkCorpus:
    """All walks for all metapaths; deterministic given the seed."""
    if not graph.frozen:
        raise ValueError("corpus generation requires a frozen graph")
    config.validate()
    walks: list[np.ndarray] = []
    indices: list[int] = []
    for mp_index, metapath in enumerate(metapaths):
        anchors = graph.nodes_with_label(metapath.anchor)
        if not anchors:
            warnings.warn(
                f"metapath {metapath.labels}: anchor label absent from graph; skipped",
                stacklevel=2,
            )
            continue
        for node in anchors:
            rng = _walk_rng(config.seed, mp_index, node)
            for _ in range(config.walks_per_node):
                walks.append(metapath_walk(graph, node, metapath, config, rng))
                indices.append(mp_index)
    labels = tuple(graph.node_label(v) for v in range(graph.n_nodes))
    return WalkCorpus(walks=walks, metapath_indices=indices, node_labels=labels)
