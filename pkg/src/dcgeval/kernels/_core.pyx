# Compiled kernel backend. Must stay operation-for-operation identical to
# dcgeval.kernels._pure: same IEEE-754 double ops in the same order, so the
# two backends return bit-identical arrays. Keep default (strict) float
# semantics; never enable fast-math style optimizations here.

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()


@cython.boundscheck(False)
@cython.wraparound(False)
def sample_logged_items(
    cnp.int64_t[:, ::1] ranked,
    cnp.int64_t[::1] ctx_idx,
    double[:, ::1] quality,
    double[::1] pbm_probs,
    double[:, ::1] view_u,
    double[:, ::1] reward_vals,
    bint binary,
):
    cdef Py_ssize_t n = ranked.shape[0]
    cdef Py_ssize_t L = ranked.shape[1]
    cdef Py_ssize_t i, j, total, pos
    cdef cnp.int64_t[::1] counts = np.zeros(n, dtype=np.int64)

    total = 0
    for i in range(n):
        for j in range(L):
            if view_u[i, j] < pbm_probs[j]:
                counts[i] += 1
                total += 1

    actions_arr = np.empty(total, dtype=np.int64)
    ranks_arr = np.empty(total, dtype=np.int64)
    props_arr = np.empty(total, dtype=np.float64)
    rewards_arr = np.empty(total, dtype=np.float64)
    cdef cnp.int64_t[::1] actions = actions_arr
    cdef cnp.int64_t[::1] ranks = ranks_arr
    cdef double[::1] props = props_arr
    cdef double[::1] rewards = rewards_arr

    cdef double q
    pos = 0
    for i in range(n):
        for j in range(L):
            if view_u[i, j] < pbm_probs[j]:
                actions[pos] = ranked[i, j]
                ranks[pos] = j + 1
                props[pos] = pbm_probs[j]
                q = quality[ctx_idx[i], ranked[i, j]]
                if binary:
                    rewards[pos] = 1.0 if reward_vals[i, j] < q else 0.0
                else:
                    rewards[pos] = q * reward_vals[i, j]
                pos += 1

    return np.asarray(counts), actions_arr, ranks_arr, props_arr, rewards_arr


@cython.boundscheck(False)
@cython.wraparound(False)
def dcg_values(
    cnp.int64_t[::1] offsets,
    double[::1] labels,
    double[::1] disc,
):
    cdef Py_ssize_t n = offsets.shape[0] - 1
    cdef Py_ssize_t i, t
    cdef double acc
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        acc = 0.0
        for t in range(offsets[i], offsets[i + 1]):
            acc += labels[t] * disc[t]
        out[i] = acc
    return out_arr


@cython.boundscheck(False)
@cython.wraparound(False)
def ideal_dcg_values(
    cnp.int64_t[::1] offsets,
    double[::1] labels,
    double[::1] disc_by_pos,
):
    cdef Py_ssize_t n = offsets.shape[0] - 1
    cdef Py_ssize_t i, j, t, lo, hi, m
    cdef double acc, key
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t max_len = 0
    for i in range(n):
        if offsets[i + 1] - offsets[i] > max_len:
            max_len = offsets[i + 1] - offsets[i]
    buf_arr = np.empty(max(max_len, 1), dtype=np.float64)
    cdef double[::1] buf = buf_arr

    for i in range(n):
        lo = offsets[i]
        hi = offsets[i + 1]
        m = hi - lo
        for t in range(m):
            buf[t] = labels[lo + t]
        # insertion sort, descending
        for t in range(1, m):
            key = buf[t]
            j = t - 1
            while j >= 0 and buf[j] < key:
                buf[j + 1] = buf[j]
                j -= 1
            buf[j + 1] = key
        acc = 0.0
        for t in range(m):
            acc += buf[t] * disc_by_pos[t]
        out[i] = acc
    return out_arr
