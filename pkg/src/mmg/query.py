"""Query-time inference: attach a virtual query node, embed it inductively,
blend the visual and conceptual embeddings, and answer retrieval requests.

The blend is E = (w1*E_i + w2*E_t) / 2 with w1 + w2 = 1, where E_i is the
inductive embedding of the query attached image-only and E_t the mean of
the query tags' trained embeddings. Cosine ranking is scale-invariant, so
the global /2 (and the lack of renormalization) never changes any result
list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .encoder import EncoderConfig, EncoderParams, forward, gather_features
from .errors import (
    DimensionMismatch,
    EmptyQuery,
    MissingImageFeature,
    NoResolvableTags,
    NonFiniteInput,
)
from .graph import MultiModalGraph, NodeKind
from .index import EmbeddingIndex, top_k
from .ingest import normalize_tag
from .sampling import LayeredSample, deterministic_children


class ConnectivityMode(str, Enum):
    IMAGE_ONLY = "image_only"
    TAG_ONLY = "tag_only"
    BOTH = "both"


@dataclass
class Connectivity:
    mode: ConnectivityMode = ConnectivityMode.BOTH
    k: int = 5  # attachment fan-in for the image side

    def __post_init__(self):
        self.mode = ConnectivityMode(self.mode)
        if self.k < 1:
            raise ValueError("attachment k must be >= 1")


@dataclass
class BlendWeights:
    w_visual: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.w_visual <= 1.0:
            raise ValueError("visual weight must lie in [0, 1]")

    @property
    def w_concept(self) -> float:
        return 1.0 - self.w_visual


@dataclass
class QuerySpec:
    init_feature: Optional[np.ndarray] = None
    sim_feature: Optional[np.ndarray] = None  # defaults to init_feature
    tags: list[str] = field(default_factory=list)
    connectivity: Connectivity = field(default_factory=Connectivity)
    blend: BlendWeights = field(default_factory=BlendWeights)
    k_results: int = 5
    source_key: Optional[str] = None  # set when the query is a corpus image
    exclude_attached: bool = True

    def __post_init__(self):
        if self.init_feature is not None:
            self.init_feature = np.asarray(self.init_feature, dtype=np.float32).reshape(-1)
            if not np.all(np.isfinite(self.init_feature)):
                raise NonFiniteInput("query init_feature must be finite")
        if self.sim_feature is not None:
            self.sim_feature = np.asarray(self.sim_feature, dtype=np.float32).reshape(-1)
            if not np.all(np.isfinite(self.sim_feature)):
                raise NonFiniteInput("query sim_feature must be finite")
        if self.k_results < 1:
            raise ValueError("k_results must be >= 1")


@dataclass
class Attachment:
    """Ephemeral neighborhood of a virtual query node; never inserted."""
    neighbor_ids: np.ndarray  # sorted ascending
    image_neighbor_ids: np.ndarray
    resolved_tag_ids: np.ndarray
    dropped_tags: list[str]
    root_feature: np.ndarray


@dataclass
class RetrievalResult:
    results: list[tuple[str, float]]
    w_visual: float
    w_concept: float
    resolved_tags: list[str]
    dropped_tags: list[str]


def resolve_tags(g: MultiModalGraph, tags: list[str]) -> tuple[list[int], list[str]]:
    """Normalize and look up tags; unknown ones are reported, not fatal."""
    resolved: list[int] = []
    dropped: list[str] = []
    seen: set[int] = set()
    for raw in tags:
        try:
            norm = normalize_tag(raw)
        except Exception:
            dropped.append(raw)
            continue
        if g.has_key(norm) and g.kind_of(g.id_of(norm)) == NodeKind.TAG:
            tid = g.id_of(norm)
            if tid not in seen:
                seen.add(tid)
                resolved.append(tid)
        else:
            dropped.append(raw)
    return resolved, dropped


def nearest_images(g: MultiModalGraph, sim_feature: np.ndarray, k: int) -> np.ndarray:
    """Top-k corpus images by cosine against the stored node features.

    Snapshots keep only the node-initialization features, so query-time
    attachment ranks against those; the query vector must be d_in wide.
    """
    if sim_feature.shape[0] != g.d_in:
        raise DimensionMismatch(
            f"query feature width {sim_feature.shape[0]} != graph d_in {g.d_in}")
    image_ids = g.ids_of_kind(NodeKind.IMAGE)
    feats = g.features[image_ids].astype(np.float64)
    norms = np.linalg.norm(feats, axis=1)
    qn = float(np.linalg.norm(sim_feature))
    if qn == 0.0:
        raise MissingImageFeature("query feature has zero norm")
    safe = np.where(norms > 0, norms, 1)
    scores = (feats @ sim_feature.astype(np.float64)) / (safe * qn)
    scores[norms == 0] = -np.inf
    order = np.lexsort((image_ids, -scores))
    return image_ids[order[:min(k, image_ids.shape[0])]]


def attach_query(g: MultiModalGraph, spec: QuerySpec) -> Attachment:
    """Build the virtual node's neighbor list per the connectivity mode."""
    mode = spec.connectivity.mode
    image_neigh = np.empty(0, dtype=np.int64)
    tag_ids: list[int] = []
    dropped: list[str] = []

    if mode in (ConnectivityMode.IMAGE_ONLY, ConnectivityMode.BOTH):
        feat = spec.sim_feature if spec.sim_feature is not None else spec.init_feature
        if feat is None:
            raise MissingImageFeature(f"{mode.value} attachment needs an image feature")
        image_neigh = nearest_images(g, feat, spec.connectivity.k)

    if mode in (ConnectivityMode.TAG_ONLY, ConnectivityMode.BOTH):
        tag_ids, dropped = resolve_tags(g, spec.tags)
        if not tag_ids:
            raise NoResolvableTags(
                f"no query tag resolves against the corpus vocabulary: {spec.tags}")

    neighbors = np.unique(np.concatenate(
        [image_neigh, np.asarray(tag_ids, dtype=np.int64)]))

    if spec.init_feature is not None:
        root_feature = spec.init_feature
    else:
        if not tag_ids:
            raise MissingImageFeature("query has neither an image feature nor tags")
        root_feature = g.features[np.asarray(tag_ids, dtype=np.int64)].mean(axis=0)

    return Attachment(
        neighbor_ids=neighbors,
        image_neighbor_ids=np.sort(image_neigh),
        resolved_tag_ids=np.asarray(tag_ids, dtype=np.int64),
        dropped_tags=dropped,
        root_feature=np.asarray(root_feature, dtype=np.float32),
    )


def embed_query(g: MultiModalGraph, params: EncoderParams, attachment: Attachment,
                cfg: EncoderConfig | None = None,
                fanouts: tuple[int, int] = (25, 10)) -> np.ndarray:
    """Inference-mode forward rooted at the virtual node: its children are
    the attachment neighbors (ascending, truncated to the first fanout),
    their children come from the real adjacency."""
    cfg = cfg or EncoderConfig()
    indptr, indices = g.csr()
    f1, f2 = fanouts
    neigh = attachment.neighbor_ids
    take = min(neigh.shape[0], f1)
    level1 = np.full(f1, -1, dtype=np.int64)
    level1[:take] = neigh[:take]
    counts0 = np.array([take], dtype=np.int64)
    level2, counts1 = deterministic_children(indptr, indices, level1, f2)
    sample = LayeredSample(levels=[np.array([-1], dtype=np.int64), level1, level2],
                           counts=[counts0, counts1], fanouts=(f1, f2))
    feats = g.features.astype(params.dtype, copy=False)
    xs = gather_features(feats, sample, root_features=attachment.root_feature)
    z = forward(params, xs, sample.counts, (f1, f2), cfg, train=False)
    return z[0]


def concept_embedding(tag_ids: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Mean of the tags' trained embeddings."""
    if len(tag_ids) == 0:
        raise NoResolvableTags("concept embedding needs at least one resolved tag")
    return table[np.asarray(tag_ids, dtype=np.int64)].mean(axis=0)


def blend(e_visual: np.ndarray, e_concept: np.ndarray, w: BlendWeights) -> np.ndarray:
    """(w1*E_i + w2*E_t)/2, computed literally; not renormalized."""
    for arr in (e_visual, e_concept):
        if not np.all(np.isfinite(arr)):
            raise NonFiniteInput("blend inputs must be finite")
    return (w.w_visual * e_visual + w.w_concept * e_concept) / 2.0


def retrieve_images(g: MultiModalGraph, params: EncoderParams, index: EmbeddingIndex,
                    table: np.ndarray, spec: QuerySpec,
                    cfg: EncoderConfig | None = None) -> RetrievalResult:
    """Ranked image results for a visual and/or conceptual query.

    Connectivity gives coarse control (image_only forces w1=1, tag_only
    forces w1=0); the blend weight interpolates inside "both" mode. E_i
    always comes from an image-only attachment so w1=1 is purely visual.
    """
    mode = spec.connectivity.mode
    has_image = spec.init_feature is not None or spec.sim_feature is not None
    resolved, dropped = resolve_tags(g, spec.tags)
    use_tags = bool(resolved) and mode != ConnectivityMode.IMAGE_ONLY
    if spec.tags and not resolved and mode != ConnectivityMode.IMAGE_ONLY:
        raise NoResolvableTags(
            f"no query tag resolves against the corpus vocabulary: {spec.tags}")
    use_image = has_image and mode != ConnectivityMode.TAG_ONLY
    if mode == ConnectivityMode.TAG_ONLY and not resolved:
        raise NoResolvableTags("tag_only query needs at least one resolvable tag")
    if mode == ConnectivityMode.IMAGE_ONLY and not has_image:
        raise MissingImageFeature("image_only query needs an image feature")
    if not use_image and not use_tags:
        raise EmptyQuery("query has neither an image feature nor resolvable tags")

    if not use_tags:
        w = BlendWeights(w_visual=1.0)
    elif not use_image:
        w = BlendWeights(w_visual=0.0)
    else:
        w = spec.blend

    dim = params.out_dim
    exclude: set[int] = set()
    e_visual = np.zeros(dim, dtype=np.float32)
    e_concept = np.zeros(dim, dtype=np.float32)
    if use_image:
        att = attach_query(g, QuerySpec(
            init_feature=spec.init_feature, sim_feature=spec.sim_feature,
            connectivity=Connectivity(ConnectivityMode.IMAGE_ONLY, spec.connectivity.k)))
        e_visual = embed_query(g, params, att, cfg)
        if spec.exclude_attached and spec.source_key is not None:
            exclude = {int(i) for i in att.image_neighbor_ids}
    if use_tags:
        e_concept = concept_embedding(np.asarray(resolved, dtype=np.int64), table)

    e = blend(e_visual, e_concept, w)
    hits = top_k(index, e, spec.k_results, kind_filter=NodeKind.IMAGE,
                 exclude=exclude)
    return RetrievalResult(
        results=[(g.key_of(nid), score) for nid, score in hits],
        w_visual=w.w_visual,
        w_concept=w.w_concept,
        resolved_tags=[g.key_of(t) for t in resolved],
        dropped_tags=dropped,
    )


def predict_tags(g: MultiModalGraph, params: EncoderParams, index: EmbeddingIndex,
                 spec: QuerySpec, cfg: EncoderConfig | None = None) -> list[tuple[str, float]]:
    """Ranked tags for an image query, via image-only attachment."""
    if spec.init_feature is None and spec.sim_feature is None:
        raise MissingImageFeature("tag prediction needs an image feature")
    att = attach_query(g, QuerySpec(
        init_feature=spec.init_feature, sim_feature=spec.sim_feature,
        connectivity=Connectivity(ConnectivityMode.IMAGE_ONLY, spec.connectivity.k)))
    z = embed_query(g, params, att, cfg)
    hits = top_k(index, z, spec.k_results, kind_filter=NodeKind.TAG)
    return [(g.key_of(nid), score) for nid, score in hits]
