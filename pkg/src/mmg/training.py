"""Unsupervised training loop and whole-graph embedding.

Each epoch regenerates walk pairs from a per-epoch derived seed, shuffles
and batches them, and for every batch encodes the pair endpoints plus a
shared set of degree-biased negatives, steps Adam on the exact gradients,
and records the mean loss. Single-threaded seeded runs are bit-reproducible.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng
from .encoder import (
    EncoderConfig,
    EncoderParams,
    backward,
    batch_loss_and_grads,
    forward,
    gather_features,
    zeros_like_params,
)
from .errors import DegenerateGraph, NotFrozen
from .graph import MultiModalGraph
from .sampling import (
    SamplerConfig,
    cap_adjacency,
    generate_pairs,
    inference_sample,
    sample_fanout,
    sample_negatives,
)


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 512
    learning_rate: float = 1e-5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    optimizer: str = "adam"  # or "sgd"
    hidden: int = 128
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    rng_seed: int = 0
    regenerate_pairs: bool = True  # fresh walks each epoch

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TrainReport:
    epoch_losses: list[float]
    wall_time_s: float
    checkpoint_path: str | None = None


class Adam:
    def __init__(self, params: EncoderParams, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params.matrices()]
        self.v = [np.zeros_like(p) for p in params.matrices()]

    def step(self, params: EncoderParams, grads: EncoderParams) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for i, (p, g) in enumerate(zip(params.matrices(), grads.matrices())):
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * (g * g)
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            p -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.dtype)


class Sgd:
    def __init__(self, params: EncoderParams, lr: float):
        self.lr = lr

    def step(self, params: EncoderParams, grads: EncoderParams) -> None:
        for p, g in zip(params.matrices(), grads.matrices()):
            p -= (self.lr * g).astype(p.dtype)


def batch_gradients(g: MultiModalGraph, params: EncoderParams, cfg: TrainConfig,
                    pairs: np.ndarray, negatives: np.ndarray,
                    view=None, seed: int = 0, dtype=None):
    """Loss and exact parameter gradients for one batch of pairs.

    The same path the training loop takes; exposed separately so gradient
    checks can drive it in 64-bit mode.
    """
    if dtype is not None and params.dtype != dtype:
        params = params.astype(dtype)
    if view is None:
        view = cap_adjacency(g, cfg.sampler)
    feats = g.features.astype(params.dtype, copy=False)
    fanouts = cfg.sampler.fanouts

    roots = {"u": pairs[:, 0], "v": pairs[:, 1], "n": negatives}
    zs, caches = {}, {}
    for i, (role, r) in enumerate(roots.items()):
        sample = sample_fanout(view, r, fanouts, rng.derive_seed(seed, rng.FANOUT, i))
        xs = gather_features(feats, sample)
        zs[role], caches[role] = forward(
            params, xs, sample.counts, fanouts, cfg.encoder, train=True,
            dropout_seed=rng.derive_seed(seed, rng.DROPOUT, i), want_cache=True)

    loss, dzu, dzv, dzn = batch_loss_and_grads(zs["u"], zs["v"], zs["n"])
    grads = zeros_like_params(params)
    backward(caches["u"], params, dzu, grads)
    backward(caches["v"], params, dzv, grads)
    backward(caches["n"], params, dzn, grads)
    return loss, grads


def train(g: MultiModalGraph, cfg: TrainConfig,
          init: EncoderParams | None = None,
          progress=None) -> tuple[EncoderParams, TrainReport]:
    """Run the optimization loop; returns final params and the loss curve."""
    if not g.frozen:
        raise NotFrozen("training requires a frozen graph")
    if g.node_count < 2 or g.edge_count < 1:
        raise DegenerateGraph("graph needs at least 2 nodes and 1 edge")

    t0 = time.perf_counter()
    from .encoder import init_params
    params = init if init is not None else init_params(
        g.d_in, hidden=cfg.hidden, rng_seed=cfg.rng_seed)
    if cfg.optimizer == "adam":
        opt = Adam(params, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                   cfg.adam_eps)
    else:
        opt = Sgd(params, cfg.learning_rate)

    view = cap_adjacency(g, cfg.sampler)
    feats = g.features
    fanouts = cfg.sampler.fanouts
    q = cfg.sampler.negatives_per_positive
    epoch_losses: list[float] = []
    base_pairs = None

    for epoch in range(1, cfg.epochs + 1):
        if base_pairs is None or cfg.regenerate_pairs:
            pair_seed = rng.derive_seed(cfg.rng_seed, rng.WALKS, epoch)
            base_pairs = generate_pairs(g, cfg.sampler, view=view, seed=pair_seed)
        pairs = base_pairs
        if pairs.shape[0] == 0:
            raise DegenerateGraph("no walk pairs generable (all nodes isolated?)")
        if pairs.shape[0] < cfg.batch_size:
            raise DegenerateGraph(
                f"batch_size {cfg.batch_size} exceeds the {pairs.shape[0]} "
                "positive pairs this graph yields; lower batch_size or raise "
                "walks_per_node")
        order = np.random.default_rng(
            rng.derive_seed(cfg.rng_seed, rng.SHUFFLE, epoch)).permutation(pairs.shape[0])
        pairs = pairs[order]

        total_loss = 0.0
        total_pairs = 0
        n_batches = (pairs.shape[0] + cfg.batch_size - 1) // cfg.batch_size
        for b in range(n_batches):
            batch = pairs[b * cfg.batch_size:(b + 1) * cfg.batch_size]
            step_seed = rng.derive_seed(cfg.rng_seed, epoch, b)
            negs = sample_negatives(g, q, cfg.sampler,
                                    seed=rng.derive_seed(step_seed, rng.NEGATIVES))

            zs, caches = {}, {}
            for i, (role, roots) in enumerate(
                    (("u", batch[:, 0]), ("v", batch[:, 1]), ("n", negs))):
                sample = sample_fanout(view, roots, fanouts,
                                       rng.derive_seed(step_seed, rng.FANOUT, i))
                xs = gather_features(feats, sample)
                zs[role], caches[role] = forward(
                    params, xs, sample.counts, fanouts, cfg.encoder, train=True,
                    dropout_seed=rng.derive_seed(step_seed, rng.DROPOUT, i),
                    want_cache=True)

            loss, dzu, dzv, dzn = batch_loss_and_grads(zs["u"], zs["v"], zs["n"])
            grads = zeros_like_params(params)
            backward(caches["u"], params, dzu, grads)
            backward(caches["v"], params, dzv, grads)
            backward(caches["n"], params, dzn, grads)
            opt.step(params, grads)

            total_loss += loss * batch.shape[0]
            total_pairs += batch.shape[0]

        epoch_losses.append(total_loss / total_pairs)
        if progress is not None:
            progress(epoch, epoch_losses[-1])

    return params, TrainReport(epoch_losses=epoch_losses,
                               wall_time_s=time.perf_counter() - t0)


def embed_all(g: MultiModalGraph, params: EncoderParams,
              cfg: EncoderConfig | None = None,
              fanouts: tuple[int, int] = (25, 10),
              chunk: int = 1024) -> np.ndarray:
    """Inference-mode embedding of every node, via deterministic truncated
    neighborhoods; rows indexed by NodeId."""
    if not g.frozen:
        raise NotFrozen("embed_all requires a frozen graph")
    cfg = cfg or EncoderConfig()
    feats = g.features.astype(params.dtype, copy=False)
    out = np.zeros((g.node_count, params.out_dim), dtype=params.dtype)
    for lo in range(0, g.node_count, chunk):
        roots = np.arange(lo, min(lo + chunk, g.node_count), dtype=np.int64)
        sample = inference_sample(g, roots, fanouts)
        xs = gather_features(feats, sample)
        out[roots] = forward(params, xs, sample.counts, fanouts, cfg, train=False)
    return out


def write_loss_csv(path, losses: list[float]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "mean_loss"])
        for i, loss in enumerate(losses, start=1):
            w.writerow([i, f"{loss:.9g}"])
