"""Shared fixtures: toy graphs and the trained two-cluster corpus."""

from __future__ import annotations

from types import SimpleNamespace

import numpy as np
import pytest

from mmg.encoder import EncoderConfig, save_params
from mmg.graph import EdgeKind, MultiModalGraph, NodeKind
from mmg.index import build_index, save_embeddings
from mmg.ingest import BuildConfig, ImageRecord, build_graph, save_graph
from mmg.sampling import SamplerConfig
from mmg.training import TrainConfig, embed_all, train

# Two well-separated Gaussian feature clusters ("alpha" vs "beta"), used by
# the acceptance suite and the service tests. Cluster mean separation is
# sqrt(2), far above the 4*sigma = 0.2 requirement.
D_IN = 32
SIGMA = 0.05
CORPUS_SEED = 2024


def cluster_mean(label: str) -> np.ndarray:
    mu = np.zeros(D_IN)
    mu[0 if label == "a" else 1] = 1.0
    return mu


def cluster_feature(rng: np.random.Generator, label: str) -> np.ndarray:
    return cluster_mean(label) + SIGMA * rng.normal(size=D_IN)


def two_cluster_corpus():
    """60 corpus records (30 per cluster) plus 6 held-out query features."""
    rng = np.random.default_rng(CORPUS_SEED)
    records, labels = [], {}
    for i in range(30):
        key = f"a{i:02d}"
        records.append(ImageRecord(key=key, init_feature=cluster_feature(rng, "a"),
                                   tags=["alpha"]))
        labels[key] = "a"
    for i in range(30):
        key = f"b{i:02d}"
        records.append(ImageRecord(key=key, init_feature=cluster_feature(rng, "b"),
                                   tags=["beta"]))
        labels[key] = "b"
    heldout = [("a", cluster_feature(rng, "a")) for _ in range(3)] + \
              [("b", cluster_feature(rng, "b")) for _ in range(3)]
    return records, labels, heldout


def toy_graph(seed: int, d_in: int = 5) -> MultiModalGraph:
    """20-node toy graph (18 images, 2 tags) for gradient checks."""
    rng = np.random.default_rng(seed)
    g = MultiModalGraph(d_in=d_in)
    for i in range(18):
        g.add_node(f"img{i:02d}", NodeKind.IMAGE, rng.normal(size=d_in))
    tag_a = g.add_node("alpha", NodeKind.TAG, rng.normal(size=d_in))
    tag_b = g.add_node("beta", NodeKind.TAG, rng.normal(size=d_in))
    for i in range(18):
        g.add_edge(i, tag_a if i < 9 else tag_b, EdgeKind.IMAGE_TAG)
    for i in range(0, 16, 2):
        g.add_edge(i, i + 1, EdgeKind.IMAGE_IMAGE)
    return g.freeze()


def quick_train_config(seed: int = 3, epochs: int = 3) -> TrainConfig:
    """Small configuration for tests that just need trained artifacts."""
    return TrainConfig(
        epochs=epochs, batch_size=32, learning_rate=1e-3, hidden=8,
        sampler=SamplerConfig(walks_per_node=5, walk_length=3, fanouts=(5, 3),
                              negatives_per_positive=4, rng_seed=seed),
        encoder=EncoderConfig(dropout=0.2),
        rng_seed=seed)


@pytest.fixture(scope="session")
def synthetic(tmp_path_factory):
    """The trained two-cluster experiment, built once per session.

    Training runs the stock hyperparameters scaled to 20 epochs;
    artifacts are also serialized so CLI/service tests can load them.
    """
    import time
    records, labels, heldout = two_cluster_corpus()
    t0 = time.perf_counter()
    g = build_graph(records, BuildConfig(
        k_neighbors=5, similarity_threshold=0.65, d_in=D_IN, rng_seed=CORPUS_SEED))
    cfg = TrainConfig(
        epochs=20, batch_size=512, learning_rate=1e-5,
        sampler=SamplerConfig(rng_seed=CORPUS_SEED),
        encoder=EncoderConfig(dropout=0.2),
        rng_seed=CORPUS_SEED)
    params, report = train(g, cfg)
    table = embed_all(g, params)
    experiment_seconds = time.perf_counter() - t0
    index = build_index(table, np.arange(g.node_count, dtype=np.int64),
                        g.kinds_array())

    art = tmp_path_factory.mktemp("artifacts")
    save_graph(g, art / "graph.mmgf")
    save_params(params, cfg.encoder, art / "weights.mmgw")
    save_embeddings(table, np.arange(g.node_count, dtype=np.int64),
                    g.kinds_array(), art / "embeddings.mmge")

    return SimpleNamespace(
        records=records, labels=labels, heldout=heldout,
        graph=g, config=cfg, params=params, report=report,
        table=table, index=index, artifact_dir=art,
        experiment_seconds=experiment_seconds)


@pytest.fixture(scope="session")
def tiny_trained(tmp_path_factory):
    """A 12-image, 2-tag corpus trained in about a second; enough for
    exercising interfaces that need real artifacts but not quality."""
    rng = np.random.default_rng(5)
    d = 8
    records = []
    for i in range(12):
        mu = np.zeros(d)
        mu[0 if i < 6 else 1] = 1.0
        records.append(ImageRecord(
            key=f"img{i:02d}", init_feature=mu + 0.05 * rng.normal(size=d),
            tags=["alpha"] if i < 6 else ["beta"]))
    g = build_graph(records, BuildConfig(k_neighbors=2, similarity_threshold=0.5,
                                         d_in=d, rng_seed=5))
    cfg = quick_train_config(seed=5)
    params, _ = train(g, cfg)
    table = embed_all(g, params, cfg.encoder, fanouts=cfg.sampler.fanouts)
    index = build_index(table, np.arange(g.node_count, dtype=np.int64),
                        g.kinds_array())
    art = tmp_path_factory.mktemp("tiny_artifacts")
    save_graph(g, art / "graph.mmgf")
    save_params(params, cfg.encoder, art / "weights.mmgw")
    save_embeddings(table, np.arange(g.node_count, dtype=np.int64),
                    g.kinds_array(), art / "embeddings.mmge")
    return SimpleNamespace(graph=g, config=cfg, params=params, table=table,
                           index=index, artifact_dir=art, records=records)
