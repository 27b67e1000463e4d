# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled skip-gram negative-sampling training kernel.

Hot loop of embedding training: one fused SGD update per (center,
context) pair with sampled negatives. Semantics (update order, RNG
stream, learning-rate schedule) mirror ``_sgns_ref.py`` exactly.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log1p

ctypedef unsigned long long u64

cdef double _INV_2_53 = 1.0 / 9007199254740992.0


cdef inline u64 _next_u64(u64* state) nogil:
    state[0] = state[0] + <u64>0x9E3779B97F4A7C15
    cdef u64 z = state[0]
    z = (z ^ (z >> 30)) * <u64>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <u64>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline double _next_double(u64* state) nogil:
    return <double>(_next_u64(state) >> 11) * _INV_2_53


cdef inline double _sigmoid(double f) nogil:
    cdef double e
    if f >= 0.0:
        return 1.0 / (1.0 + exp(-f))
    e = exp(f)
    return e / (1.0 + e)


cdef inline double _log_sigmoid(double f) nogil:
    if f >= 0.0:
        return -log1p(exp(-f))
    return f - log1p(exp(f))


cdef inline Py_ssize_t _sample_node(u64* state, double[::1] cdf) nogil:
    # upper_bound: first index with cdf[idx] > u (matches np.searchsorted 'right')
    cdef double u = _next_double(state)
    cdef Py_ssize_t lo = 0, hi = cdf.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    return lo


def train_sgns(cnp.int32_t[::1] walk_data, cnp.int64_t[::1] walk_offsets,
               double[:, ::1] w_in, double[:, ::1] w_out,
               double[::1] noise_cdf, int window, int negatives, int epochs,
               double lr0, long long total_pairs, unsigned long long seed):
    """Run SGNS SGD in place; returns mean loss per epoch."""
    cdef Py_ssize_t n_walks = walk_offsets.shape[0] - 1
    cdef Py_ssize_t dim = w_in.shape[1]
    cdef u64 state = seed
    cdef double[::1] acc = np.zeros(dim)
    cdef cnp.float64_t[::1] epoch_losses = np.zeros(epochs)
    cdef double schedule_total = <double>max(1, total_pairs * epochs)
    cdef long long t = 0, pair_count
    cdef Py_ssize_t epoch, w, start, stop, length, i, j, d, attempt, retry
    cdef Py_ssize_t center, context, neg, cand
    cdef double loss_sum, lr, f, g, decay

    for epoch in range(epochs):
        loss_sum = 0.0
        pair_count = 0
        with nogil:
            for w in range(n_walks):
                start = walk_offsets[w]
                stop = walk_offsets[w + 1]
                length = stop - start
                for i in range(length):
                    center = walk_data[start + i]
                    for j in range(max(0, i - window),
                                   min(length - 1, i + window) + 1):
                        if j == i:
                            continue
                        context = walk_data[start + j]
                        decay = 1.0 - t / schedule_total
                        if decay < 1e-4:
                            decay = 1e-4
                        lr = lr0 * decay
                        for d in range(dim):
                            acc[d] = 0.0
                        f = 0.0
                        for d in range(dim):
                            f += w_in[center, d] * w_out[context, d]
                        loss_sum += -_log_sigmoid(f)
                        g = (1.0 - _sigmoid(f)) * lr
                        for d in range(dim):
                            acc[d] += g * w_out[context, d]
                            w_out[context, d] += g * w_in[center, d]
                        for attempt in range(negatives):
                            neg = -1
                            for retry in range(100):
                                cand = _sample_node(&state, noise_cdf)
                                if cand != context:
                                    neg = cand
                                    break
                            if neg < 0:
                                continue
                            f = 0.0
                            for d in range(dim):
                                f += w_in[center, d] * w_out[neg, d]
                            loss_sum += -_log_sigmoid(-f)
                            g = (0.0 - _sigmoid(f)) * lr
                            for d in range(dim):
                                acc[d] += g * w_out[neg, d]
                                w_out[neg, d] += g * w_in[center, d]
                        for d in range(dim):
                            w_in[center, d] += acc[d]
                        t += 1
                        pair_count += 1
        epoch_losses[epoch] = loss_sum / pair_count if pair_count else 0.0
    return np.asarray(epoch_losses)
