# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled sampling kernels.

Mirrors mmg._kernels_np exactly: same counter-based RNG, same counter
addressing, same output ordering, so both backends are bit-identical.
"""

import numpy as np

cimport numpy as cnp

ctypedef unsigned long long u64

cdef u64 GOLDEN = 0x9E3779B97F4A7C15
cdef u64 MIX1 = 0xBF58476D1CE4E5B9
cdef u64 MIX2 = 0x94D049BB133111EB


cdef inline u64 _mix64(u64 z) nogil:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline u64 _rand_u64(u64 seed, u64 counter) nogil:
    return _mix64(seed + (counter + 1) * GOLDEN)


cdef inline u64 _bounded(u64 r, u64 n) nogil:
    return ((r >> 32) * n) >> 32


def random_walk_pairs(long long[::1] indptr, long long[::1] indices,
                      long long walks_per_node, long long walk_length,
                      u64 seed):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t node, w, step
    cdef long long cur, deg, start
    cdef u64 gw, r
    cdef Py_ssize_t alive = 0

    for node in range(n):
        if indptr[node + 1] > indptr[node]:
            alive += 1

    cdef Py_ssize_t cap = alive * walks_per_node * walk_length
    out_u = np.empty(cap, dtype=np.int64)
    out_v = np.empty(cap, dtype=np.int64)
    cdef long long[::1] ou = out_u
    cdef long long[::1] ov = out_v
    cdef Py_ssize_t m = 0

    with nogil:
        for node in range(n):
            if indptr[node + 1] == indptr[node]:
                continue
            start = node
            for w in range(walks_per_node):
                gw = <u64>(node * walks_per_node + w)
                cur = start
                for step in range(walk_length):
                    deg = indptr[cur + 1] - indptr[cur]
                    r = _rand_u64(seed, gw * <u64>walk_length + <u64>step)
                    cur = indices[indptr[cur] + <long long>_bounded(r, <u64>deg)]
                    if cur != start:
                        ou[m] = start
                        ov[m] = cur
                        m += 1

    return out_u[:m].copy(), out_v[:m].copy()


def fanout_sample(long long[::1] indptr, long long[::1] indices,
                  long long[::1] parents, long long fanout, u64 seed):
    cdef Py_ssize_t p = parents.shape[0]
    out = np.full(p * fanout, -1, dtype=np.int64)
    cdef long long[::1] o = out
    cdef Py_ssize_t slot, j
    cdef long long parent, deg
    cdef u64 r

    with nogil:
        for slot in range(p):
            parent = parents[slot]
            if parent < 0:
                continue
            deg = indptr[parent + 1] - indptr[parent]
            if deg == 0:
                continue
            for j in range(fanout):
                r = _rand_u64(seed, <u64>(slot * fanout) + <u64>j)
                o[slot * fanout + j] = indices[indptr[parent] + <long long>_bounded(r, <u64>deg)]

    return out
