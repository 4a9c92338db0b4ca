"""NumPy implementation of the sampling kernels.

Selected at import time by :mod:`mmg.kernels` when the compiled extension is
unavailable (or forced via ``MMG_FORCE_NUMPY=1``). Both backends consume the
same counter-based RNG (see :mod:`mmg.rng`), so their outputs are
bit-identical: the random walk advancing node ``i``'s walk ``w`` at step
``s`` is addressed by counter ``(i * walks_per_node + w) * walk_length + s``
no matter which backend runs it, and all walks advance in lockstep here.
"""

from __future__ import annotations

import numpy as np

from .rng import bounded, rand_u64


def random_walk_pairs(
    indptr: np.ndarray,
    indices: np.ndarray,
    walks_per_node: int,
    walk_length: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform random walks from every node; returns co-occurrence pairs.

    For each node with at least one neighbor, ``walks_per_node`` walks of
    ``walk_length`` steps are taken; every visited node differing from the
    start yields one (start, visited) pair, ordered by (walk, step).
    """
    n = indptr.shape[0] - 1
    deg = np.diff(indptr)
    gw = np.arange(n * walks_per_node, dtype=np.int64)
    starts = gw // walks_per_node
    alive = deg[starts] > 0
    gw = gw[alive]
    starts = starts[alive]
    if gw.size == 0:
        return (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))

    gw_u = gw.astype(np.uint64)
    cur = starts.copy()
    visited = np.empty((gw.size, walk_length), dtype=np.int64)
    for step in range(walk_length):
        counters = gw_u * np.uint64(walk_length) + np.uint64(step)
        r = rand_u64(seed, counters)
        d = (indptr[cur + 1] - indptr[cur]).astype(np.uint64)
        off = bounded(r, d).astype(np.int64)
        cur = indices[indptr[cur] + off]
        visited[:, step] = cur

    keep = (visited != starts[:, None]).ravel()
    u = np.repeat(starts, walk_length)[keep]
    v = visited.ravel()[keep]
    return u, v


def fanout_sample(
    indptr: np.ndarray,
    indices: np.ndarray,
    parents: np.ndarray,
    fanout: int,
    seed: int,
) -> np.ndarray:
    """With-replacement neighbor draws: ``fanout`` children per parent slot.

    Parents may contain -1 sentinels (empty neighborhoods upstream); those
    slots, and parents with no neighbors, emit -1 children. Draw ``j`` for
    parent slot ``p`` is addressed by counter ``p * fanout + j``.
    """
    p = parents.shape[0]
    out = np.full(p * fanout, -1, dtype=np.int64)
    slot = np.nonzero(parents >= 0)[0]
    if slot.size == 0:
        return out
    pv = parents[slot]
    d = indptr[pv + 1] - indptr[pv]
    has = d > 0
    slot = slot[has]
    pv = pv[has]
    d = d[has]
    if slot.size == 0:
        return out
    counters = (slot[:, None].astype(np.uint64) * np.uint64(fanout)
                + np.arange(fanout, dtype=np.uint64)[None, :])
    r = rand_u64(seed, counters)
    off = bounded(r, d[:, None].astype(np.uint64)).astype(np.int64)
    children = indices[indptr[pv][:, None] + off]
    out.reshape(p, fanout)[slot] = children
    return out
