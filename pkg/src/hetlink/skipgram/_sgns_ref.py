"""Pure-Python skip-gram negative-sampling training kernel.

Reference implementation of the hot loop; semantics (update order, RNG
stream, learning-rate schedule) mirror the compiled kernel in
``_sgns_fast.pyx`` so the two backends are interchangeable. Kept simple
and obviously correct; use the compiled kernel for real corpora.
"""

import math

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_INV_2_53 = 1.0 / 9007199254740992.0


def _next_u64(state: int) -> tuple[int, int]:
    # splitmix64; state and output are 64-bit
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    z = z ^ (z >> 31)
    return state, z


def _next_double(state: int) -> tuple[int, float]:
    state, z = _next_u64(state)
    return state, (z >> 11) * _INV_2_53


def _sigmoid(f: float) -> float:
    if f >= 0.0:
        return 1.0 / (1.0 + math.exp(-f))
    e = math.exp(f)
    return e / (1.0 + e)


def _log_sigmoid(f: float) -> float:
    if f >= 0.0:
        return -math.log1p(math.exp(-f))
    return f - math.log1p(math.exp(f))


def train_sgns(walk_data, walk_offsets, w_in, w_out, noise_cdf, window,
               negatives, epochs, lr0, total_pairs, seed):
    """Run SGNS SGD in place over the packed walk corpus.

    Returns the mean loss per epoch. ``total_pairs`` is the per-epoch
    (center, context) pair count and drives the linear learning-rate
    decay (floored at ``lr0 * 1e-4``).
    """
    n_walks = len(walk_offsets) - 1
    state = int(seed) & _MASK
    epoch_losses = np.zeros(epochs)
    schedule_total = max(1, total_pairs * epochs)
    t = 0
    for epoch in range(epochs):
        loss_sum = 0.0
        pair_count = 0
        for w in range(n_walks):
            start, stop = int(walk_offsets[w]), int(walk_offsets[w + 1])
            length = stop - start
            for i in range(length):
                center = int(walk_data[start + i])
                lo = max(0, i - window)
                hi = min(length - 1, i + window)
                for j in range(lo, hi + 1):
                    if j == i:
                        continue
                    context = int(walk_data[start + j])
                    lr = lr0 * max(1.0 - t / schedule_total, 1e-4)
                    center_row = w_in[center]
                    acc = np.zeros_like(center_row)
                    f = float(np.dot(center_row, w_out[context]))
                    loss_sum += -_log_sigmoid(f)
                    g = (1.0 - _sigmoid(f)) * lr
                    acc += g * w_out[context]
                    w_out[context] += g * center_row
                    for _ in range(negatives):
                        neg = -1
                        for _attempt in range(100):
                            state, u = _next_double(state)
                            cand = int(np.searchsorted(noise_cdf, u, side="right"))
                            if cand != context:
                                neg = cand
                                break
                        if neg < 0:
                            continue
                        f = float(np.dot(center_row, w_out[neg]))
                        loss_sum += -_log_sigmoid(-f)
                        g = (0.0 - _sigmoid(f)) * lr
                        acc += g * w_out[neg]
                        w_out[neg] += g * center_row
                    w_in[center] += acc
                    t += 1
                    pair_count += 1
        epoch_losses[epoch] = loss_sum / pair_count if pair_count else 0.0
    return epoch_losses
