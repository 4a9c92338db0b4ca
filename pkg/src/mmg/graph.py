"""In-memory multi-modal graph: image and tag nodes, typed undirected edges,
and the per-node feature store shared by training and retrieval.

Nodes get dense integer ids in insertion order; external string keys live in
a side mapping. The graph is append-only while building and must be frozen
(immutable) before anything samples or serializes it. Freezing compacts the
adjacency into CSR arrays for the sampling kernels.
"""

from __future__ import annotations

from bisect import bisect_left, insort
from enum import IntEnum
from typing import Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateEdge,
    DuplicateKey,
    FrozenGraph,
    KindMismatch,
    NonFiniteFeature,
    NotFrozen,
    SelfLoop,
    UnknownNode,
)


class NodeKind(IntEnum):
    IMAGE = 0
    TAG = 1


class EdgeKind(IntEnum):
    IMAGE_IMAGE = 0
    IMAGE_TAG = 1


def edge_kind_for(kind_u: NodeKind, kind_v: NodeKind) -> EdgeKind:
    """The edge kind implied by two endpoint kinds; tag-tag is forbidden."""
    if kind_u == NodeKind.IMAGE and kind_v == NodeKind.IMAGE:
        return EdgeKind.IMAGE_IMAGE
    if NodeKind.TAG in (kind_u, kind_v) and NodeKind.IMAGE in (kind_u, kind_v):
        return EdgeKind.IMAGE_TAG
    raise KindMismatch("tag-tag edges are forbidden")


class MultiModalGraph:
    """Bipartite-plus-kNN graph over a shared dense id space."""

    def __init__(self, d_in: int = 512):
        if d_in < 1:
            raise DimensionMismatch(f"d_in must be >= 1, got {d_in}")
        self.d_in = d_in
        self._keys: list[str] = []
        self._kinds: list[NodeKind] = []
        self._key_to_id: dict[str, int] = {}
        self._adj: list[list[int]] = []
        self._features: list[np.ndarray] = []
        self._edge_count = 0
        self._frozen = False
        # set by freeze()
        self.features: Optional[np.ndarray] = None
        self.indptr: Optional[np.ndarray] = None
        self.indices: Optional[np.ndarray] = None

    # --- build phase -----------------------------------------------------

    def add_node(self, key: str, kind: NodeKind, feature) -> int:
        if self._frozen:
            raise FrozenGraph("cannot add nodes after freeze")
        if key in self._key_to_id:
            raise DuplicateKey(f"node key already present: {key!r}")
        vec = np.asarray(feature, dtype=np.float32).reshape(-1)
        if vec.shape[0] != self.d_in:
            raise DimensionMismatch(
                f"feature for {key!r} has length {vec.shape[0]}, expected {self.d_in}")
        if not np.all(np.isfinite(vec)):
            raise NonFiniteFeature(f"feature for {key!r} contains non-finite entries")
        nid = len(self._keys)
        self._keys.append(key)
        self._kinds.append(NodeKind(kind))
        self._key_to_id[key] = nid
        self._adj.append([])
        self._features.append(vec)
        return nid

    def add_edge(self, u: int, v: int, kind: EdgeKind) -> None:
        if self._frozen:
            raise FrozenGraph("cannot add edges after freeze")
        self._check_node(u)
        self._check_node(v)
        if u == v:
            raise SelfLoop(f"self-loop on node {u}")
        implied = edge_kind_for(self._kinds[u], self._kinds[v])
        if implied != EdgeKind(kind):
            raise KindMismatch(
                f"edge kind {EdgeKind(kind).name} does not match endpoint kinds "
                f"{self._kinds[u].name}-{self._kinds[v].name}")
        lst = self._adj[u]
        pos = bisect_left(lst, v)
        if pos < len(lst) and lst[pos] == v:
            raise DuplicateEdge(f"edge ({u}, {v}) already present")
        lst.insert(pos, v)
        insort(self._adj[v], u)
        self._edge_count += 1

    def freeze(self) -> "MultiModalGraph":
        """Compact to CSR and make the graph immutable."""
        if self._frozen:
            return self
        n = len(self._keys)
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        for i, lst in enumerate(self._adj):
            self.indptr[i + 1] = self.indptr[i] + len(lst)
        self.indices = np.empty(int(self.indptr[-1]), dtype=np.int64)
        for i, lst in enumerate(self._adj):
            self.indices[self.indptr[i]:self.indptr[i + 1]] = lst
        if n:
            self.features = np.vstack(self._features).astype(np.float32)
        else:
            self.features = np.zeros((0, self.d_in), dtype=np.float32)
        self._kind_arr = np.array([int(k) for k in self._kinds], dtype=np.uint8)
        self._frozen = True
        return self

    # --- read access ------------------------------------------------------

    @property
    def frozen(self) -> bool:
        return self._frozen

    @property
    def node_count(self) -> int:
        return len(self._keys)

    @property
    def edge_count(self) -> int:
        return self._edge_count

    def _check_node(self, v: int) -> None:
        if not (0 <= v < len(self._keys)):
            raise UnknownNode(f"no node with id {v}")

    def key_of(self, v: int) -> str:
        self._check_node(v)
        return self._keys[v]

    def id_of(self, key: str) -> int:
        try:
            return self._key_to_id[key]
        except KeyError:
            raise UnknownNode(f"no node with key {key!r}") from None

    def has_key(self, key: str) -> bool:
        return key in self._key_to_id

    def kind_of(self, v: int) -> NodeKind:
        self._check_node(v)
        return self._kinds[v]

    def feature_of(self, v: int) -> np.ndarray:
        self._check_node(v)
        if self._frozen:
            return self.features[v]
        return self._features[v]

    def degree(self, v: int) -> int:
        self._check_node(v)
        if self._frozen:
            return int(self.indptr[v + 1] - self.indptr[v])
        return len(self._adj[v])

    def neighbors(self, v: int, kind: Optional[EdgeKind] = None) -> list[int]:
        """Sorted neighbor ids, optionally restricted to one edge kind."""
        self._check_node(v)
        if self._frozen:
            nbrs = self.indices[self.indptr[v]:self.indptr[v + 1]]
            if kind is None:
                return [int(x) for x in nbrs]
            kv = self._kinds[v]
            return [int(u) for u in nbrs
                    if edge_kind_for(kv, self._kinds[int(u)]) == EdgeKind(kind)]
        if kind is None:
            return list(self._adj[v])
        kv = self._kinds[v]
        return [u for u in self._adj[v]
                if edge_kind_for(kv, self._kinds[u]) == EdgeKind(kind)]

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        if not self._frozen:
            raise NotFrozen("CSR view requires a frozen graph")
        return self.indptr, self.indices

    def kinds_array(self) -> np.ndarray:
        if not self._frozen:
            raise NotFrozen("kinds array requires a frozen graph")
        return self._kind_arr

    def degrees_array(self) -> np.ndarray:
        if not self._frozen:
            raise NotFrozen("degrees require a frozen graph")
        return np.diff(self.indptr)

    def ids_of_kind(self, kind: NodeKind) -> np.ndarray:
        if not self._frozen:
            raise NotFrozen("kind partition requires a frozen graph")
        return np.nonzero(self._kind_arr == int(kind))[0].astype(np.int64)

    def iter_edges(self):
        """Yield (u, v, kind) with u < v, ascending."""
        for u in range(len(self._keys)):
            nbrs = self.neighbors(u)
            ku = self._kinds[u]
            for v in nbrs:
                if u < v:
                    yield u, v, edge_kind_for(ku, self._kinds[v])

    def equals(self, other: "MultiModalGraph") -> bool:
        """Structural equality with bit-identical features."""
        if self.d_in != other.d_in or self.node_count != other.node_count:
            return False
        if self._keys != other._keys or self._kinds != other._kinds:
            return False
        for v in range(self.node_count):
            if self.neighbors(v) != other.neighbors(v):
                return False
            if self.feature_of(v).tobytes() != other.feature_of(v).tobytes():
                return False
        return True
