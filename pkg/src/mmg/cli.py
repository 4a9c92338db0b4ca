"""Command-line pipeline: build-graph, train, embed, query, predict-tags,
eval, serve.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import MmgError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mmg",
                description="multi-modal graph embedding and retrieval")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-graph", help="images.jsonl -> graph snapshot")
    b.add_argument("--images", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--k", type=int, default=5)
    b.add_argument("--threshold", type=float, default=0.65)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--tag-init-scale", type=float, default=0.1)

    t = sub.add_parser("train", help="graph -> trained weights + loss curve")
    t.add_argument("--graph", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--loss-csv")
    t.add_argument("--epochs", type=int, default=50)
    t.add_argument("--batch-size", type=int, default=512)
    t.add_argument("--lr", type=float, default=1e-5)
    t.add_argument("--dropout", type=float, default=0.2)
    t.add_argument("--hidden", type=int, default=128)
    t.add_argument("--walks-per-node", type=int, default=50)
    t.add_argument("--walk-length", type=int, default=5)
    t.add_argument("--negatives", type=int, default=20)
    t.add_argument("--max-degree", type=int, default=100)
    t.add_argument("--fanouts", default="25,10")
    t.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--quiet", action="store_true")

    e = sub.add_parser("embed", help="graph + weights -> embedding table")
    e.add_argument("--graph", required=True)
    e.add_argument("--weights", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--fanouts", default="25,10")

    q = sub.add_parser("query", help="retrieve images for a query")
    _query_args(q)
    q.add_argument("--tags", default="", help="comma-separated tag list")
    q.add_argument("--visual-weight", type=float, default=0.5)
    q.add_argument("--connectivity", choices=("image_only", "tag_only", "both"),
                   default="both")

    pt = sub.add_parser("predict-tags", help="rank tags for an image query")
    _query_args(pt)

    ev = sub.add_parser("eval", help="judgments.csv -> relevance report")
    ev.add_argument("--judgments", required=True)
    ev.add_argument("--out")
    ev.add_argument("--gain", choices=("exponential", "linear"), default="exponential")

    s = sub.add_parser("serve", help="HTTP service over built artifacts")
    s.add_argument("--artifacts", help="directory with graph.mmgf, weights.mmgw, "
                                       "embeddings.mmge (or MMG_ARTIFACT_DIR)")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    s.add_argument("--ui-dir", help="static assets mounted at /ui/")
    return p


def _query_args(p):
    p.add_argument("--graph", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--image-key")
    p.add_argument("--feature-file", help="JSON array or object with init_feature")
    p.add_argument("--k", type=int, default=5)


def _parse_fanouts(text: str) -> tuple[int, int]:
    parts = [int(x) for x in text.split(",")]
    if len(parts) != 2 or any(x < 1 for x in parts):
        raise MmgError(f"fanouts must be two positive integers, got {text!r}")
    return parts[0], parts[1]


def _load_query_feature(args, g):
    from .graph import NodeKind
    if args.image_key:
        if not g.has_key(args.image_key) or \
                g.kind_of(g.id_of(args.image_key)) != NodeKind.IMAGE:
            raise MmgError(f"unknown image key {args.image_key!r}")
        return g.feature_of(g.id_of(args.image_key)), args.image_key
    if args.feature_file:
        obj = json.loads(Path(args.feature_file).read_text(encoding="utf-8"))
        if isinstance(obj, dict):
            obj = obj.get("init_feature", obj.get("feature"))
        return np.asarray(obj, dtype=np.float32), None
    return None, None


def _load_artifacts(args):
    from .encoder import load_params
    from .index import build_index, load_embeddings
    from .ingest import load_graph
    g = load_graph(args.graph)
    params, enc_cfg = load_params(args.weights)
    table, ids, kinds = load_embeddings(args.embeddings)
    full = np.zeros((g.node_count, table.shape[1]), dtype=np.float32)
    full[ids] = table
    return g, params, enc_cfg, build_index(table, ids, kinds), full


def _cmd_build_graph(args) -> int:
    from .ingest import BuildConfig, build_graph, load_records, save_graph
    records = load_records(args.images)
    if not records:
        raise MmgError(f"no records in {args.images}")
    cfg = BuildConfig(k_neighbors=args.k, similarity_threshold=args.threshold,
                      d_in=records[0].init_feature.shape[0], rng_seed=args.seed,
                      tag_init_scale=args.tag_init_scale)
    g = build_graph(records, cfg)
    save_graph(g, args.out)
    print(f"graph: {g.node_count} nodes, {g.edge_count} edges -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    from .encoder import EncoderConfig, save_params
    from .ingest import load_graph
    from .sampling import SamplerConfig
    from .training import TrainConfig, train, write_loss_csv
    g = load_graph(args.graph)
    cfg = TrainConfig(
        epochs=args.epochs, batch_size=args.batch_size, learning_rate=args.lr,
        optimizer=args.optimizer, hidden=args.hidden,
        sampler=SamplerConfig(
            walks_per_node=args.walks_per_node, walk_length=args.walk_length,
            fanouts=_parse_fanouts(args.fanouts), max_degree=args.max_degree,
            negatives_per_positive=args.negatives, rng_seed=args.seed),
        encoder=EncoderConfig(dropout=args.dropout),
        rng_seed=args.seed)
    progress = None if args.quiet else \
        (lambda ep, loss: print(f"epoch {ep}: mean loss {loss:.6f}", file=sys.stderr))
    params, report = train(g, cfg, progress=progress)
    save_params(params, cfg.encoder, args.out)
    if args.loss_csv:
        write_loss_csv(args.loss_csv, report.epoch_losses)
    print(f"trained {cfg.epochs} epochs in {report.wall_time_s:.1f}s -> {args.out}")
    return 0


def _cmd_embed(args) -> int:
    from .encoder import load_params
    from .index import save_embeddings
    from .ingest import load_graph
    from .training import embed_all
    g = load_graph(args.graph)
    params, enc_cfg = load_params(args.weights)
    table = embed_all(g, params, enc_cfg, fanouts=_parse_fanouts(args.fanouts))
    ids = np.arange(g.node_count, dtype=np.int64)
    save_embeddings(table, ids, g.kinds_array(), args.out)
    print(f"embedded {g.node_count} nodes -> {args.out}")
    return 0


def _cmd_query(args) -> int:
    from .query import BlendWeights, Connectivity, ConnectivityMode, QuerySpec, \
        retrieve_images
    g, params, enc_cfg, index, table = _load_artifacts(args)
    feature, source_key = _load_query_feature(args, g)
    tags = [t for t in args.tags.split(",") if t.strip()]
    spec = QuerySpec(
        init_feature=feature, tags=tags,
        connectivity=Connectivity(ConnectivityMode(args.connectivity)),
        blend=BlendWeights(w_visual=args.visual_weight),
        k_results=args.k, source_key=source_key)
    res = retrieve_images(g, params, index, table, spec, enc_cfg)
    print(json.dumps({
        "results": [{"key": k, "score": s} for k, s in res.results],
        "dropped_tags": res.dropped_tags,
        "effective_weights": {"w1": res.w_visual, "w2": res.w_concept},
    }, indent=2))
    return 0


def _cmd_predict_tags(args) -> int:
    from .query import QuerySpec, predict_tags
    g, params, enc_cfg, index, _ = _load_artifacts(args)
    feature, _ = _load_query_feature(args, g)
    if feature is None:
        raise MmgError("predict-tags needs --image-key or --feature-file")
    spec = QuerySpec(init_feature=feature, k_results=args.k)
    tags = predict_tags(g, params, index, spec, enc_cfg)
    print(json.dumps({"tags": [{"tag": t, "score": s} for t, s in tags]}, indent=2))
    return 0


def _cmd_eval(args) -> int:
    from .evaluation import evaluation_report, load_judgments
    judgments = load_judgments(args.judgments)
    report = evaluation_report(judgments, variant=args.gain)
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def _cmd_serve(args) -> int:
    import os
    from .service import run
    artifacts = args.artifacts or os.environ.get("MMG_ARTIFACT_DIR")
    if not artifacts:
        raise MmgError("serve needs --artifacts or MMG_ARTIFACT_DIR")
    run(artifacts, host=args.host, port=args.port, ui_dir=args.ui_dir)
    return 0


_COMMANDS = {
    "build-graph": _cmd_build_graph,
    "train": _cmd_train,
    "embed": _cmd_embed,
    "query": _cmd_query,
    "predict-tags": _cmd_predict_tags,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except MmgError as exc:
        print(f"mmg: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"mmg: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
