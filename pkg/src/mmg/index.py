"""Exact top-k cosine retrieval over the embedding table.

Brute-force matrix-vector scoring with a full deterministic sort: fine at
demo scale, exactly testable, and trivially swappable for an approximate
backend later. Ties break by ascending node id.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import EmptyTable, ShapeMismatch, ZeroQuery
from .fileio import Cursor, read_framed, write_framed
from .graph import NodeKind

EMBED_MAGIC = b"MMGE"
EMBED_VERSION = 1


@dataclass
class EmbeddingIndex:
    matrix: np.ndarray  # unit rows, float32
    ids: np.ndarray  # int64, ascending
    kinds: np.ndarray  # uint8
    dropped_zero_rows: int = 0

    def __post_init__(self):
        # per-kind row masks, precomputed once per build
        self._kind_masks = {
            int(kind): self.kinds == int(kind) for kind in NodeKind}

    def kind_mask(self, kind: NodeKind) -> np.ndarray:
        return self._kind_masks[int(kind)]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def row_of(self, node_id: int) -> Optional[int]:
        pos = np.searchsorted(self.ids, node_id)
        if pos < self.ids.shape[0] and self.ids[pos] == node_id:
            return int(pos)
        return None


def build_index(table: np.ndarray, ids: np.ndarray, kinds: np.ndarray) -> EmbeddingIndex:
    """Index all nonzero rows, defensively renormalized, sorted by id."""
    table = np.asarray(table, dtype=np.float32)
    if table.size == 0:
        raise EmptyTable("no embeddings to index")
    ids = np.asarray(ids, dtype=np.int64)
    kinds = np.asarray(kinds, dtype=np.uint8)
    order = np.argsort(ids)
    table, ids, kinds = table[order], ids[order], kinds[order]
    norms = np.linalg.norm(table, axis=1)
    keep = norms > 0
    dropped = int((~keep).sum())
    matrix = table[keep] / norms[keep][:, None]
    if matrix.shape[0] == 0:
        raise EmptyTable("all embedding rows are zero")
    return EmbeddingIndex(matrix=matrix, ids=ids[keep], kinds=kinds[keep],
                          dropped_zero_rows=dropped)


def top_k(index: EmbeddingIndex, query: np.ndarray, k: int,
          kind_filter: Optional[NodeKind] = None,
          exclude: Optional[Iterable[int]] = None) -> list[tuple[int, float]]:
    """k best (node id, cosine) sorted by score descending, id ascending.

    The query is normalized internally, so results are invariant to
    positive rescaling of the query.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    q = np.asarray(query, dtype=np.float32).reshape(-1)
    if q.shape[0] != index.dim:
        raise ShapeMismatch(f"query width {q.shape[0]} != index dim {index.dim}")
    if not np.all(np.isfinite(q)):
        raise ZeroQuery("query must be finite")
    norm = float(np.linalg.norm(q))
    if norm == 0.0:
        raise ZeroQuery("query vector has zero norm")
    q = q / norm

    scores = index.matrix @ q
    mask = np.ones(scores.shape[0], dtype=bool)
    if kind_filter is not None:
        mask &= index.kind_mask(kind_filter)
    if exclude:
        ex = np.asarray(sorted({int(e) for e in exclude}), dtype=np.int64)
        pos = np.searchsorted(index.ids, ex)
        ok = pos < index.ids.shape[0]
        pos = pos[ok]
        mask[pos[index.ids[pos] == ex[ok]]] = False

    cand = np.nonzero(mask)[0]
    if cand.size == 0:
        return []
    # full deterministic ordering: score desc, then node id asc
    order = cand[np.lexsort((index.ids[cand], -scores[cand].astype(np.float64)))]
    picked = order[:k]
    return [(int(index.ids[i]), float(scores[i])) for i in picked]


def save_embeddings(table: np.ndarray, ids: np.ndarray, kinds: np.ndarray,
                    path) -> None:
    table = np.asarray(table, dtype=np.float32)
    parts = [struct.pack("<QI", table.shape[0], table.shape[1])]
    for row, nid, kind in zip(table, ids, kinds):
        parts.append(struct.pack("<QB", int(nid), int(kind)))
        parts.append(np.ascontiguousarray(row, dtype="<f4").tobytes())
    write_framed(path, EMBED_MAGIC, EMBED_VERSION, b"".join(parts))


def load_embeddings(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    payload = read_framed(path, EMBED_MAGIC, EMBED_VERSION)
    cur = Cursor(payload)
    rows, dim = cur.take("QI")
    table = np.empty((rows, dim), dtype=np.float32)
    ids = np.empty(rows, dtype=np.int64)
    kinds = np.empty(rows, dtype=np.uint8)
    for i in range(rows):
        nid, kind = cur.take("QB")
        ids[i] = nid
        kinds[i] = kind
        table[i] = np.frombuffer(cur.take_bytes(4 * dim), dtype="<f4")
    cur.expect_end()
    return table, ids, kinds
