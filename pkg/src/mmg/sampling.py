"""Training-side sampling: random-walk co-occurrence pairs, fixed-fanout
neighborhood samples for minibatch encoding, and degree-biased negatives.

Walk and fanout draws run through the selected kernel backend
(:mod:`mmg.kernels`); everything is reproducible from (rng_seed, graph,
config) because every draw is addressed by a derived seed plus a counter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels, rng
from .errors import DegenerateGraph, NotFrozen
from .graph import MultiModalGraph


@dataclass
class SamplerConfig:
    walks_per_node: int = 50
    walk_length: int = 5
    fanouts: tuple[int, int] = (25, 10)
    max_degree: int = 100
    negatives_per_positive: int = 20
    neg_exponent: float = 0.75
    rng_seed: int = 0

    def __post_init__(self):
        self.fanouts = tuple(self.fanouts)
        if len(self.fanouts) != 2:
            raise ValueError("fanouts must have length 2 (encoder depth)")
        for name in ("walks_per_node", "walk_length", "max_degree",
                     "negatives_per_positive"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if any(f < 1 for f in self.fanouts):
            raise ValueError("fanouts must be positive")


@dataclass
class CappedAdjacency:
    """Degree-capped CSR view used by walks and training fanout sampling.

    Inference always uses the uncapped graph adjacency instead.
    """
    indptr: np.ndarray
    indices: np.ndarray


def cap_adjacency(g: MultiModalGraph, cfg: SamplerConfig) -> CappedAdjacency:
    """Subsample each neighbor list to at most max_degree, without
    replacement, seeded per node; kept sorted ascending."""
    if not g.frozen:
        raise NotFrozen("cap_adjacency requires a frozen graph")
    indptr, indices = g.csr()
    deg = np.diff(indptr)
    cap = cfg.max_degree
    if deg.size == 0 or int(deg.max()) <= cap:
        return CappedAdjacency(indptr.astype(np.int64), indices.astype(np.int64))

    new_indptr = np.zeros(deg.size + 1, dtype=np.int64)
    np.cumsum(np.minimum(deg, cap), out=new_indptr[1:])
    new_indices = np.empty(int(new_indptr[-1]), dtype=np.int64)
    for v in range(deg.size):
        lo, hi = int(indptr[v]), int(indptr[v + 1])
        if hi - lo <= cap:
            new_indices[new_indptr[v]:new_indptr[v + 1]] = indices[lo:hi]
            continue
        pool = indices[lo:hi].copy()
        seed_v = rng.derive_seed(cfg.rng_seed, rng.DEGREE_CAP, v)
        for j in range(cap):  # partial Fisher-Yates
            r = rng.rand_u64_scalar(seed_v, j)
            t = j + rng.bounded_scalar(r, (hi - lo) - j)
            pool[j], pool[t] = pool[t], pool[j]
        new_indices[new_indptr[v]:new_indptr[v + 1]] = np.sort(pool[:cap])
    return CappedAdjacency(new_indptr, new_indices)


def generate_pairs(g: MultiModalGraph, cfg: SamplerConfig,
                   view: CappedAdjacency | None = None,
                   seed: int | None = None) -> np.ndarray:
    """Random-walk co-occurrence pairs as an (m, 2) int64 array of
    (start, co-visited) node ids. Isolated nodes produce no pairs."""
    if not g.frozen:
        raise NotFrozen("generate_pairs requires a frozen graph")
    if g.node_count == 0:
        raise DegenerateGraph("empty graph")
    if view is None:
        view = cap_adjacency(g, cfg)
    if seed is None:
        seed = rng.derive_seed(cfg.rng_seed, rng.WALKS)
    u, v = kernels.random_walk_pairs(
        view.indptr, view.indices, cfg.walks_per_node, cfg.walk_length, seed)
    return np.stack([u, v], axis=1)


@dataclass
class LayeredSample:
    """Unrolled two-hop neighborhood of a batch of roots.

    levels[0] are the roots (B,), levels[1] the first-hop slots (B*f1,),
    levels[2] the second-hop slots (B*f1*f2,); -1 marks an empty slot.
    counts[l] holds, per level-l node, how many of its child slots are
    real; a node with no neighbors has count 0 and aggregates to zero.
    """
    levels: list[np.ndarray]
    counts: list[np.ndarray]
    fanouts: tuple[int, int]


def _child_counts(parents: np.ndarray, children: np.ndarray, fanout: int) -> np.ndarray:
    # with-replacement sampling fills all slots or none, so the first slot decides
    first = children.reshape(parents.shape[0], fanout)[:, 0]
    return np.where(first >= 0, fanout, 0).astype(np.int64)


def sample_fanout(view: CappedAdjacency, roots: np.ndarray,
                  fanouts: tuple[int, int], seed: int) -> LayeredSample:
    """Uniform with-replacement fanout sample of the two-hop tree."""
    roots = np.ascontiguousarray(roots, dtype=np.int64)
    f1, f2 = fanouts
    level1 = kernels.fanout_sample(view.indptr, view.indices, roots, f1,
                                   rng.derive_seed(seed, rng.FANOUT, 1))
    level2 = kernels.fanout_sample(view.indptr, view.indices, level1, f2,
                                   rng.derive_seed(seed, rng.FANOUT, 2))
    counts0 = _child_counts(roots, level1, f1)
    counts1 = _child_counts(level1, level2, f2)
    return LayeredSample(levels=[roots, level1, level2],
                         counts=[counts0, counts1], fanouts=(f1, f2))


def deterministic_children(indptr: np.ndarray, indices: np.ndarray,
                           parents: np.ndarray, fanout: int) -> tuple[np.ndarray, np.ndarray]:
    """First min(degree, fanout) neighbors in ascending id order, -1 padded.

    The inference-time counterpart of fanout_sample: no randomness, so a
    node always embeds identically.
    """
    p = parents.shape[0]
    children = np.full((p, fanout), -1, dtype=np.int64)
    counts = np.zeros(p, dtype=np.int64)
    valid = parents >= 0
    if valid.any():
        pv = parents[valid]
        deg = indptr[pv + 1] - indptr[pv]
        take = np.minimum(deg, fanout)
        counts[valid] = take
        cols = np.arange(fanout, dtype=np.int64)[None, :]
        slot_ok = cols < take[:, None]
        gather = indptr[pv][:, None] + np.minimum(cols, np.maximum(take[:, None] - 1, 0))
        if indices.size:
            picked = indices[np.where(slot_ok, gather, 0)]
            children[valid] = np.where(slot_ok, picked, -1)
    return children.reshape(-1), counts


def inference_sample(g: MultiModalGraph, roots: np.ndarray,
                     fanouts: tuple[int, int]) -> LayeredSample:
    """Deterministic two-hop neighborhoods over the uncapped adjacency."""
    indptr, indices = g.csr()
    roots = np.asarray(roots, dtype=np.int64)
    f1, f2 = fanouts
    level1, counts0 = deterministic_children(indptr, indices, roots, f1)
    level2, counts1 = deterministic_children(indptr, indices, level1, f2)
    return LayeredSample(levels=[roots, level1, level2],
                         counts=[counts0, counts1], fanouts=(f1, f2))


def negative_distribution(g: MultiModalGraph, exponent: float) -> np.ndarray:
    """P(v) proportional to degree(v)**exponent over all nodes."""
    deg = g.degrees_array().astype(np.float64)
    weights = deg ** exponent
    total = weights.sum()
    if total <= 0:
        raise DegenerateGraph("no node has positive degree")
    return weights / total


def sample_negatives(g: MultiModalGraph, count: int, cfg: SamplerConfig,
                     seed: int | None = None) -> np.ndarray:
    """i.i.d. draws from the degree-biased negative distribution."""
    if not g.frozen:
        raise NotFrozen("sample_negatives requires a frozen graph")
    if seed is None:
        seed = rng.derive_seed(cfg.rng_seed, rng.NEGATIVES)
    probs = negative_distribution(g, cfg.neg_exponent)
    cdf = np.cumsum(probs)
    counters = np.arange(count, dtype=np.uint64)
    u = rng.rand_unit(rng.rand_u64(seed, counters)) * cdf[-1]
    return np.searchsorted(cdf, u, side="right").astype(np.int64)


def dump_pairs(g: MultiModalGraph, pairs: np.ndarray, path) -> None:
    """Debug dump: one JSON object per pair, node ids resolved to keys."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for u, v in pairs:
            fh.write(json.dumps({"u": g.key_of(int(u)), "v": g.key_of(int(v))}) + "\n")
