"""HTTP service over an immutable artifact snapshot.

Requests are served only after a complete snapshot (graph, weights,
embedding index) has loaded; reloads swap the snapshot atomically, so every
request sees either the old or the new one, never a mixture. Bodies are
validated by hand so malformed input maps to 400 rather than the framework
default.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .encoder import EncoderConfig, EncoderParams, load_params
from .errors import (
    DimensionMismatch,
    EmptyQuery,
    MissingImageFeature,
    MmgError,
    NoResolvableTags,
    UnknownNode,
)
from .graph import MultiModalGraph, NodeKind
from .index import EmbeddingIndex, build_index, load_embeddings
from .ingest import load_graph
from .query import (
    BlendWeights,
    Connectivity,
    ConnectivityMode,
    QuerySpec,
    predict_tags,
    retrieve_images,
)

GRAPH_FILE = "graph.mmgf"
WEIGHTS_FILE = "weights.mmgw"
EMBEDDINGS_FILE = "embeddings.mmge"


@dataclass
class ServiceState:
    graph: MultiModalGraph
    params: EncoderParams
    encoder_cfg: EncoderConfig
    index: EmbeddingIndex
    table: np.ndarray  # full embedding table indexed by NodeId


def load_state(artifact_dir) -> ServiceState:
    artifact_dir = Path(artifact_dir)
    graph = load_graph(artifact_dir / GRAPH_FILE)
    params, encoder_cfg = load_params(artifact_dir / WEIGHTS_FILE)
    table, ids, kinds = load_embeddings(artifact_dir / EMBEDDINGS_FILE)
    full = np.zeros((graph.node_count, table.shape[1]), dtype=np.float32)
    full[ids] = table
    index = build_index(table, ids, kinds)
    return ServiceState(graph=graph, params=params, encoder_cfg=encoder_cfg,
                        index=index, table=full)


def _bad_request(msg: str) -> JSONResponse:
    return JSONResponse({"error": msg}, status_code=400)


def _parse_search_body(body: dict, state: ServiceState):
    if not isinstance(body, dict):
        raise ValueError("body must be a JSON object")
    known = {"image_key", "feature", "tags", "visual_weight", "k", "connectivity"}
    unknown = set(body) - known
    if unknown:
        raise ValueError(f"unknown fields: {sorted(unknown)}")

    if "visual_weight" not in body:
        raise ValueError("visual_weight is required")
    w1 = body["visual_weight"]
    if isinstance(w1, bool) or not isinstance(w1, (int, float)):
        raise ValueError("visual_weight must be a number")
    if not 0.0 <= float(w1) <= 1.0:
        raise ValueError("visual_weight must lie in [0, 1]")

    tags = body.get("tags", [])
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise ValueError("tags must be a list of strings")

    k = body.get("k", 5)
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ValueError("k must be a positive integer")

    mode = body.get("connectivity", "both")
    if mode not in ("image_only", "tag_only", "both"):
        raise ValueError("connectivity must be image_only, tag_only or both")

    feature = None
    source_key = None
    if body.get("image_key") is not None:
        key = body["image_key"]
        if not isinstance(key, str):
            raise ValueError("image_key must be a string")
        g = state.graph
        if not g.has_key(key) or g.kind_of(g.id_of(key)) != NodeKind.IMAGE:
            raise UnknownNode(f"unknown image_key {key!r}")
        feature = g.feature_of(g.id_of(key))
        source_key = key
    elif body.get("feature") is not None:
        raw = body["feature"]
        if not isinstance(raw, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in raw):
            raise ValueError("feature must be a list of numbers")
        feature = np.asarray(raw, dtype=np.float32)

    return QuerySpec(
        init_feature=feature,
        tags=tags,
        connectivity=Connectivity(ConnectivityMode(mode)),
        blend=BlendWeights(w_visual=float(w1)),
        k_results=k,
        source_key=source_key,
    )


def create_app(artifact_dir: Optional[str] = None,
               state: Optional[ServiceState] = None,
               ui_dir: Optional[str] = None) -> FastAPI:
    """App factory. With artifact_dir the snapshot loads at startup; a
    prebuilt state may be injected directly (tests)."""
    app = FastAPI(title="mmg retrieval service")
    app.state.snapshot = state
    app.state.artifact_dir = artifact_dir or os.environ.get("MMG_ARTIFACT_DIR")

    if app.state.snapshot is None and app.state.artifact_dir:
        app.state.snapshot = load_state(app.state.artifact_dir)

    def snapshot() -> Optional[ServiceState]:
        return app.state.snapshot

    @app.get("/api/v1/health")
    def health():
        snap = snapshot()
        if snap is None:
            return JSONResponse({"status": "loading"}, status_code=503)
        return {
            "status": "ok",
            "node_count": snap.graph.node_count,
            "index_rows": int(snap.index.ids.shape[0]),
        }

    @app.post("/api/v1/search")
    async def search(request: Request):
        snap = snapshot()
        if snap is None:
            return JSONResponse({"error": "snapshot not loaded"}, status_code=503)
        try:
            body = await request.json()
        except Exception:
            return _bad_request("request body is not valid JSON")
        try:
            spec = _parse_search_body(body, snap)
        except UnknownNode as exc:
            return JSONResponse({"error": str(exc)}, status_code=404)
        except (ValueError, DimensionMismatch) as exc:
            return _bad_request(str(exc))
        try:
            res = retrieve_images(snap.graph, snap.params, snap.index, snap.table,
                                  spec, snap.encoder_cfg)
        except (NoResolvableTags, EmptyQuery, MissingImageFeature) as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        except DimensionMismatch as exc:
            return _bad_request(str(exc))
        return {
            "results": [{"key": key, "score": score} for key, score in res.results],
            "dropped_tags": res.dropped_tags,
            "effective_weights": {"w1": res.w_visual, "w2": res.w_concept},
        }

    @app.get("/api/v1/tags/predict")
    def tags_predict(image_key: str, k: int = 5):
        snap = snapshot()
        if snap is None:
            return JSONResponse({"error": "snapshot not loaded"}, status_code=503)
        if k < 1:
            return _bad_request("k must be a positive integer")
        g = snap.graph
        if not g.has_key(image_key) or g.kind_of(g.id_of(image_key)) != NodeKind.IMAGE:
            return JSONResponse({"error": f"unknown image_key {image_key!r}"},
                                status_code=404)
        spec = QuerySpec(init_feature=g.feature_of(g.id_of(image_key)), k_results=k)
        tags = predict_tags(g, snap.params, snap.index, spec, snap.encoder_cfg)
        return {"image_key": image_key,
                "tags": [{"tag": t, "score": s} for t, s in tags]}

    @app.get("/api/v1/nodes/{key}")
    def get_node(key: str):
        snap = snapshot()
        if snap is None:
            return JSONResponse({"error": "snapshot not loaded"}, status_code=503)
        g = snap.graph
        if not g.has_key(key):
            return JSONResponse({"error": f"unknown node key {key!r}"}, status_code=404)
        nid = g.id_of(key)
        kind = g.kind_of(nid)
        out = {
            "key": key,
            "kind": "image" if kind == NodeKind.IMAGE else "tag",
            "degree": g.degree(nid),
        }
        if kind == NodeKind.IMAGE:
            from .graph import EdgeKind
            out["tags"] = [g.key_of(t) for t in g.neighbors(nid, EdgeKind.IMAGE_TAG)]
        return out

    @app.post("/api/v1/admin/reload")
    def reload_snapshot():
        if not app.state.artifact_dir:
            return _bad_request("service was started without an artifact directory")
        try:
            fresh = load_state(app.state.artifact_dir)
        except MmgError as exc:
            return JSONResponse({"error": str(exc)}, status_code=500)
        app.state.snapshot = fresh  # atomic swap
        return {"status": "reloaded", "node_count": fresh.graph.node_count}

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def run(artifact_dir: str, host: str = "127.0.0.1", port: int = 8000,
        ui_dir: Optional[str] = None) -> None:
    import uvicorn
    app = create_app(artifact_dir=artifact_dir, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)
