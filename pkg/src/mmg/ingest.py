"""Corpus ingest: image records to graph.

Reads JSON Lines image records, builds the image-image kNN edges (cosine
over the similarity features, thresholded) plus one edge per (image, tag)
pair, and serializes graph snapshots.

Tag nodes carry the normalized tag string as their node key, in the same key
space as image keys; an image keyed exactly like a tag is rejected as a
duplicate at build time.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateKey,
    EmptyAfterNormalization,
    IoFailure,
    ZeroVector,
)
from .fileio import Cursor, read_framed, write_framed
from .graph import EdgeKind, MultiModalGraph, NodeKind

GRAPH_MAGIC = b"MMGF"
GRAPH_VERSION = 1


@dataclass
class BuildConfig:
    k_neighbors: int = 5
    similarity_threshold: float = 0.65
    d_in: int = 512
    rng_seed: int = 0
    tag_init_scale: float = 0.1

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.d_in < 1:
            raise ValueError("d_in must be >= 1")
        if not -1.0 <= self.similarity_threshold <= 1.0:
            raise ValueError("similarity_threshold must lie in [-1, 1]")
        if self.tag_init_scale <= 0:
            raise ValueError("tag_init_scale must be positive")


@dataclass
class ImageRecord:
    key: str
    init_feature: np.ndarray
    sim_feature: np.ndarray = None  # kNN construction only; defaults to init_feature
    tags: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.key:
            raise ValueError("record key must be non-empty")
        self.init_feature = np.asarray(self.init_feature, dtype=np.float32).reshape(-1)
        if self.sim_feature is None:
            self.sim_feature = self.init_feature
        else:
            self.sim_feature = np.asarray(self.sim_feature, dtype=np.float32).reshape(-1)
        # dedupe after normalization, preserving first occurrence
        seen: dict[str, None] = {}
        for raw in self.tags:
            seen.setdefault(normalize_tag(raw), None)
        self.tags = list(seen)


def normalize_tag(raw: str) -> str:
    """Trim, lowercase, collapse internal whitespace."""
    out = " ".join(raw.split()).lower()
    if not out:
        raise EmptyAfterNormalization(f"tag {raw!r} is empty after normalization")
    return out


def load_records(path) -> list[ImageRecord]:
    """Parse the JSON Lines images file."""
    records = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IoFailure(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        try:
            records.append(ImageRecord(
                key=obj["key"],
                init_feature=obj["init_feature"],
                sim_feature=obj.get("sim_feature"),
                tags=obj.get("tags", []),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise IoFailure(f"{path}:{lineno}: bad record: {exc}") from exc
    return records


def build_knn_edges(records: list[ImageRecord], cfg: BuildConfig) -> list[tuple[str, str]]:
    """Per-image top-k cosine neighbors above the threshold, as an undirected
    union of both endpoints' selections. Ties break by ascending key."""
    if not records:
        raise ValueError("at least one record required")
    dims = {r.sim_feature.shape[0] for r in records}
    if len(dims) != 1:
        raise DimensionMismatch(f"similarity features differ in dimension: {sorted(dims)}")
    sims = np.vstack([r.sim_feature for r in records]).astype(np.float64)
    norms = np.linalg.norm(sims, axis=1)
    bad = np.nonzero(norms == 0.0)[0]
    if bad.size:
        raise ZeroVector(f"zero-norm similarity feature for key {records[bad[0]].key!r}")
    unit = sims / norms[:, None]
    scores = unit @ unit.T

    keys = [r.key for r in records]
    key_rank = np.argsort(np.argsort(np.array(keys)))
    n = len(records)
    pairs: set[tuple[str, str]] = set()
    for i in range(n):
        row = scores[i].copy()
        row[i] = -np.inf
        # order by similarity descending, then ascending key
        order = np.lexsort((key_rank, -row))
        for j in order[:cfg.k_neighbors]:
            if row[j] >= cfg.similarity_threshold:
                a, b = keys[i], keys[int(j)]
                pairs.add((a, b) if a < b else (b, a))
    return sorted(pairs)


def build_graph(records: list[ImageRecord], cfg: BuildConfig) -> MultiModalGraph:
    """Construct and freeze the full multi-modal graph.

    Image nodes come first in record order; tag nodes follow in order of
    first appearance. Tag features are i.i.d. uniform in
    [-tag_init_scale, +tag_init_scale], drawn from cfg.rng_seed.
    """
    if not records:
        raise ValueError("at least one record required")
    for r in records:
        if r.init_feature.shape[0] != cfg.d_in:
            raise DimensionMismatch(
                f"init_feature for {r.key!r} has length {r.init_feature.shape[0]}, "
                f"expected d_in={cfg.d_in}")
    seen = set()
    for r in records:
        if r.key in seen:
            raise DuplicateKey(f"duplicate record key {r.key!r}")
        seen.add(r.key)

    g = MultiModalGraph(d_in=cfg.d_in)
    for r in records:
        g.add_node(r.key, NodeKind.IMAGE, r.init_feature)

    vocab: dict[str, None] = {}
    for r in records:
        for t in r.tags:
            vocab.setdefault(t, None)
    tags = list(vocab)
    rng = np.random.default_rng(cfg.rng_seed)
    tag_feats = rng.uniform(-cfg.tag_init_scale, cfg.tag_init_scale,
                            size=(len(tags), cfg.d_in)).astype(np.float32)
    tag_ids = {t: g.add_node(t, NodeKind.TAG, tag_feats[i]) for i, t in enumerate(tags)}

    for r in records:
        img = g.id_of(r.key)
        for t in r.tags:
            g.add_edge(img, tag_ids[t], EdgeKind.IMAGE_TAG)

    for a, b in build_knn_edges(records, cfg):
        g.add_edge(g.id_of(a), g.id_of(b), EdgeKind.IMAGE_IMAGE)

    return g.freeze()


def save_graph(g: MultiModalGraph, path) -> None:
    if not g.frozen:
        g.freeze()
    parts = [struct.pack("<QI", g.node_count, g.d_in)]
    for v in range(g.node_count):
        key = g.key_of(v).encode("utf-8")
        parts.append(struct.pack("<I", len(key)))
        parts.append(key)
        parts.append(struct.pack("<B", int(g.kind_of(v))))
        parts.append(g.feature_of(v).astype("<f4").tobytes())
    edges = list(g.iter_edges())
    parts.append(struct.pack("<Q", len(edges)))
    for u, v, kind in edges:
        parts.append(struct.pack("<QQB", u, v, int(kind)))
    write_framed(path, GRAPH_MAGIC, GRAPH_VERSION, b"".join(parts))


def load_graph(path) -> MultiModalGraph:
    payload = read_framed(path, GRAPH_MAGIC, GRAPH_VERSION)
    cur = Cursor(payload)
    node_count, d_in = cur.take("QI")
    g = MultiModalGraph(d_in=d_in)
    for _ in range(node_count):
        klen = cur.take("I")
        key = cur.take_bytes(klen).decode("utf-8")
        kind = NodeKind(cur.take("B"))
        feat = np.frombuffer(cur.take_bytes(4 * d_in), dtype="<f4")
        g.add_node(key, kind, feat)
    edge_count = cur.take("Q")
    for _ in range(edge_count):
        u, v, kind = cur.take("QQB")
        g.add_edge(u, v, EdgeKind(kind))
    cur.expect_end()
    return g.freeze()
