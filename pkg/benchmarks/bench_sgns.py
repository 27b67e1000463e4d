#!/usr/bin/env python3
"""Benchmark the two skip-gram training kernels against each other.

The compiled Cython extension and the pure-Python reference share
update order and RNG stream, so besides timing both, this script checks
they produce matching tables on the benchmark corpus.

Usage: python benchmarks/bench_sgns.py [--walks N] [--length L] [--dim D]
"""

import argparse
import time

import numpy as np

import hetlink.skipgram as sg
from hetlink.skipgram import _pack_corpus, _pair_count
from hetlink.walks import WalkCorpus


def synthetic_corpus(n_walks: int, length: int, n_nodes: int) -> WalkCorpus:
    rng = np.random.default_rng(0)
    walks = [np.asarray(rng.choice(n_nodes, size=length), dtype=np.int64)
             for _ in range(n_walks)]
    return WalkCorpus(walks=walks, metapath_indices=[0] * n_walks,
                      node_labels=tuple("n" for _ in range(n_nodes)))


def run(backend: str, corpus: WalkCorpus, config: sg.SkipGramConfig,
        pairs: int) -> float:
    started = time.perf_counter()
    table = sg.train_embeddings(corpus, config, backend=backend)
    elapsed = time.perf_counter() - started
    rate = pairs * config.epochs / elapsed
    print(f"{backend:9s}  {elapsed:8.2f}s  {rate / 1e3:10.1f}k pairs/s")
    return table


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--walks", type=int, default=1000)
    parser.add_argument("--length", type=int, default=40)
    parser.add_argument("--nodes", type=int, default=400)
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--epochs", type=int, default=2)
    args = parser.parse_args()

    corpus = synthetic_corpus(args.walks, args.length, args.nodes)
    config = sg.SkipGramConfig(dim=args.dim, epochs=args.epochs, seed=1)
    _, offsets = _pack_corpus(corpus.walks)
    pairs = _pair_count(offsets, config.window)
    print(f"corpus: {args.walks} walks x {args.length} nodes, "
          f"{pairs} pairs/epoch, dim {args.dim}, {args.epochs} epochs")
    print(f"{'backend':9s}  {'time':>9s}  {'throughput':>12s}")

    if sg.BACKEND != "compiled":
        print("compiled kernel unavailable; benchmarking the fallback only")
        run("python", corpus, config, pairs)
        return

    fast = run("compiled", corpus, config, pairs)
    ref = run("python", corpus, config, pairs)
    deviation = float(np.max(np.abs(fast.input_vectors - ref.input_vectors)))
    print(f"max |compiled - python| over the table: {deviation:.3e}")
    if deviation > 1e-8:
        raise SystemExit("backends diverged beyond tolerance")


if __name__ == "__main__":
    main()
