"""Two-layer mean-aggregator encoder with the unsupervised
negative-sampling objective and exact analytic gradients.

Layer l maps a node representation h and the mean n of its sampled
neighbors' representations to ``act(concat(h @ W_self[l], n @ W_neigh[l]))``.
The rectifier acts on layer 1 only; layer 2 is linear and the root outputs
are L2-normalized (so dot products are cosines). Concatenation doubles the
width, giving 2*hidden-dimensional embeddings.

Empty neighborhoods aggregate to the zero vector; zero-feature sentinel
rows therefore stay exactly zero through every layer and never leak
gradient. Dropout is inverted (scaled by 1/keep at train time) and applied
to the two inputs of each layer application, the node's own representation
and its aggregated neighbor mean; masks come from a counter-derived seed,
so a fixed seed makes the whole forward pass a deterministic function,
gradients included.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import NonFiniteActivation, NonFiniteInput, ShapeMismatch
from .fileio import Cursor, read_framed, write_framed
from .sampling import LayeredSample

WEIGHTS_MAGIC = b"MMGW"
WEIGHTS_VERSION = 1


@dataclass
class EncoderConfig:
    dropout: float = 0.2
    final_l2_normalize: bool = True

    def __post_init__(self):
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")


@dataclass
class EncoderParams:
    """w_self[l] and w_neigh[l] for l in {0, 1}; layer 2 consumes the
    concatenated (2*hidden)-wide output of layer 1."""
    w_self: list[np.ndarray]
    w_neigh: list[np.ndarray]

    @property
    def d_in(self) -> int:
        return self.w_self[0].shape[0]

    @property
    def hidden(self) -> int:
        return self.w_self[0].shape[1]

    @property
    def out_dim(self) -> int:
        return 2 * self.w_self[1].shape[1]

    @property
    def dtype(self):
        return self.w_self[0].dtype

    def matrices(self) -> list[np.ndarray]:
        """Canonical order: w_self[0], w_neigh[0], w_self[1], w_neigh[1]."""
        return [self.w_self[0], self.w_neigh[0], self.w_self[1], self.w_neigh[1]]

    def astype(self, dtype) -> "EncoderParams":
        return EncoderParams(
            w_self=[m.astype(dtype) for m in self.w_self],
            w_neigh=[m.astype(dtype) for m in self.w_neigh],
        )

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            w_self=[m.copy() for m in self.w_self],
            w_neigh=[m.copy() for m in self.w_neigh],
        )


def zeros_like_params(params: EncoderParams) -> EncoderParams:
    return EncoderParams(
        w_self=[np.zeros_like(m) for m in params.w_self],
        w_neigh=[np.zeros_like(m) for m in params.w_neigh],
    )


def init_params(d_in: int, hidden: int = 128, rng_seed: int = 0,
                dtype=np.float32) -> EncoderParams:
    """Glorot-uniform init, bounds +-sqrt(6/(fan_in+fan_out)), seeded."""
    gen = np.random.default_rng(rng_seed)

    def glorot(rows, cols):
        bound = np.sqrt(6.0 / (rows + cols))
        return gen.uniform(-bound, bound, size=(rows, cols)).astype(dtype)

    return EncoderParams(
        w_self=[glorot(d_in, hidden), glorot(2 * hidden, hidden)],
        w_neigh=[glorot(d_in, hidden), glorot(2 * hidden, hidden)],
    )


def gather_features(features: np.ndarray, sample: LayeredSample,
                    root_features: np.ndarray | None = None) -> list[np.ndarray]:
    """Per-level feature matrices for a layered sample; -1 slots get zero
    rows. root_features overrides level 0 (virtual query nodes)."""
    xs = []
    for li, ids in enumerate(sample.levels):
        if li == 0 and root_features is not None:
            xs.append(np.atleast_2d(np.asarray(root_features)))
            continue
        x = features[np.maximum(ids, 0)]
        x[ids < 0] = 0
        xs.append(x)
    return xs


def _mean_children(x: np.ndarray, counts: np.ndarray, fanout: int) -> np.ndarray:
    total = x.reshape(counts.shape[0], fanout, x.shape[1]).sum(axis=1)
    denom = np.maximum(counts, 1).astype(x.dtype)[:, None]
    return total / denom


def _spread_to_children(dm: np.ndarray, counts: np.ndarray, fanout: int) -> np.ndarray:
    scale = np.zeros(counts.shape[0], dtype=dm.dtype)
    nz = counts > 0
    scale[nz] = 1.0 / counts[nz].astype(dm.dtype)
    per_parent = dm * scale[:, None]
    return np.repeat(per_parent, fanout, axis=0)


def _dropout_mask(shape, p: float, seed: int, dtype) -> np.ndarray:
    gen = np.random.default_rng(seed)
    u = gen.random(shape, dtype=np.float32 if dtype == np.float32 else np.float64)
    return (u >= p) * np.dtype(dtype).type(1.0 / (1.0 - p))


class ForwardCache:
    """Intermediates retained for the analytic backward pass."""

    __slots__ = ("x0d", "x1d", "m1d", "m2d", "a0", "a1", "h0d", "mhd",
                 "mask_h0", "mask_mh", "y", "z", "norms", "counts",
                 "fanouts", "normalized")


def forward(params: EncoderParams, xs: list[np.ndarray], counts: list[np.ndarray],
            fanouts: tuple[int, int], cfg: EncoderConfig, train: bool = False,
            dropout_seed: int = 0, want_cache: bool = False):
    """Root embeddings (rows unit-norm unless the output is zero).

    xs are the per-level feature matrices of a layered sample (train:
    with-replacement fanout sample; inference: deterministic truncated
    neighborhoods). Returns (z, cache) when want_cache, else z.
    """
    dtype = params.dtype
    f1, f2 = fanouts
    d_in = params.d_in
    for li, x in enumerate(xs):
        if x.shape[1] != d_in:
            raise ShapeMismatch(
                f"level {li} features have width {x.shape[1]}, expected {d_in}")
    b = xs[0].shape[0]
    if xs[1].shape[0] != b * f1 or xs[2].shape[0] != b * f1 * f2:
        raise ShapeMismatch("level sizes do not match fanouts")

    xs = [x.astype(dtype, copy=False) for x in xs]
    ws1, wn1 = params.w_self[0], params.w_neigh[0]
    ws2, wn2 = params.w_self[1], params.w_neigh[1]
    drop = cfg.dropout if train else 0.0

    def masked(arr, mask_id):
        if drop == 0.0:
            return arr, None
        mask = _dropout_mask(arr.shape, drop,
                             rng.derive_seed(dropout_seed, rng.DROPOUT, mask_id), dtype)
        return arr * mask, mask

    m1 = _mean_children(xs[1], counts[0], f1)
    m2 = _mean_children(xs[2], counts[1], f2)
    x0d, _ = masked(xs[0], 0)
    m1d, _ = masked(m1, 1)
    x1d, _ = masked(xs[1], 2)
    m2d, _ = masked(m2, 3)

    a0 = np.concatenate([x0d @ ws1, m1d @ wn1], axis=1)
    a1 = np.concatenate([x1d @ ws1, m2d @ wn1], axis=1)
    h0 = np.maximum(a0, 0)
    h1 = np.maximum(a1, 0)

    mh = _mean_children(h1, counts[0], f1)
    h0d, mask_h0 = masked(h0, 4)
    mhd, mask_mh = masked(mh, 5)
    y = np.concatenate([h0d @ ws2, mhd @ wn2], axis=1)

    if cfg.final_l2_normalize:
        norms = np.linalg.norm(y, axis=1)
        safe = np.where(norms > 0, norms, 1).astype(dtype)
        z = y / safe[:, None]
    else:
        norms = None
        z = y

    if not np.all(np.isfinite(z)):
        raise NonFiniteActivation("non-finite values in encoder output")

    if not want_cache:
        return z
    cache = ForwardCache()
    cache.x0d, cache.x1d = x0d, x1d
    cache.m1d, cache.m2d = m1d, m2d
    cache.a0, cache.a1 = a0, a1
    cache.h0d, cache.mhd = h0d, mhd
    cache.mask_h0, cache.mask_mh = mask_h0, mask_mh
    cache.y, cache.z = y, z
    cache.norms = norms
    cache.counts = counts
    cache.fanouts = fanouts
    cache.normalized = cfg.final_l2_normalize
    return z, cache


def backward(cache: ForwardCache, params: EncoderParams, dz: np.ndarray,
             grads: EncoderParams) -> None:
    """Accumulate d(loss)/d(params) into grads, given d(loss)/d(z).

    Exact gradient of the forward pass above, including the path through
    the L2 normalization and the weight sharing between the two layer-1
    applications.
    """
    f1, _ = cache.fanouts
    h = params.hidden
    ws2, wn2 = params.w_self[1], params.w_neigh[1]

    if cache.normalized:
        norms = cache.norms
        safe = np.where(norms > 0, norms, 1).astype(dz.dtype)
        zdot = np.sum(cache.z * dz, axis=1, keepdims=True)
        dy = (dz - cache.z * zdot) / safe[:, None]
        dy[norms == 0] = 0
    else:
        dy = dz

    dy_l, dy_r = dy[:, :h], dy[:, h:]
    grads.w_self[1] += cache.h0d.T @ dy_l
    grads.w_neigh[1] += cache.mhd.T @ dy_r
    dh0 = dy_l @ ws2.T
    dmh = dy_r @ wn2.T
    if cache.mask_h0 is not None:
        dh0 = dh0 * cache.mask_h0
        dmh = dmh * cache.mask_mh
    dh1 = _spread_to_children(dmh, cache.counts[0], f1)

    da0 = dh0 * (cache.a0 > 0)
    da1 = dh1 * (cache.a1 > 0)

    grads.w_self[0] += cache.x0d.T @ da0[:, :h] + cache.x1d.T @ da1[:, :h]
    grads.w_neigh[0] += cache.m1d.T @ da0[:, h:] + cache.m2d.T @ da1[:, h:]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softplus(x: np.ndarray) -> np.ndarray:
    # log(1 + e^x), stable for large |x|
    return np.logaddexp(0.0, x)


def pair_loss(z_u: np.ndarray, z_v: np.ndarray, z_neg: np.ndarray) -> float:
    """-log sigma(z_u.z_v) - sum_i log sigma(-z_u.z_neg_i), stabilized."""
    z_u = np.asarray(z_u)
    z_v = np.asarray(z_v)
    z_neg = np.asarray(z_neg)
    if z_neg.size:
        z_neg = np.atleast_2d(z_neg)
    else:
        z_neg = np.zeros((0, z_u.shape[-1]))
    if z_u.shape != z_v.shape or (z_neg.size and z_neg.shape[-1] != z_u.shape[-1]):
        raise ShapeMismatch("loss inputs must share the embedding width")
    for arr in (z_u, z_v, z_neg):
        if not np.all(np.isfinite(arr)):
            raise NonFiniteInput("loss inputs must be finite")
    pos = float(np.dot(z_u, z_v))
    neg = z_neg @ z_u if z_neg.size else np.zeros(0)
    return float(_softplus(-pos) + _softplus(neg).sum())


def batch_loss_and_grads(zu: np.ndarray, zv: np.ndarray, zneg: np.ndarray):
    """Mean loss over the batch plus its gradients w.r.t. all embeddings.

    Negatives are shared across the batch: every pair is pushed away from
    the same zneg rows.
    """
    for arr in (zu, zv, zneg):
        if not np.all(np.isfinite(arr)):
            raise NonFiniteInput("loss inputs must be finite")
    b = zu.shape[0]
    s_pos = np.sum(zu * zv, axis=1)
    s_neg = zu @ zneg.T
    loss = float((_softplus(-s_pos).sum() + _softplus(s_neg).sum()) / b)

    d_pos = (-_sigmoid(-s_pos) / b)[:, None]
    d_neg = _sigmoid(s_neg) / b
    dzu = d_pos * zv + d_neg @ zneg
    dzv = d_pos * zu
    dzneg = d_neg.T @ zu
    return loss, dzu.astype(zu.dtype), dzv.astype(zv.dtype), dzneg.astype(zneg.dtype)


def save_params(params: EncoderParams, cfg: EncoderConfig, path) -> None:
    parts = [struct.pack("<IIfBB", params.d_in, params.hidden,
                         cfg.dropout, int(cfg.final_l2_normalize), 2)]
    for m in params.matrices():
        parts.append(struct.pack("<II", m.shape[0], m.shape[1]))
        parts.append(np.ascontiguousarray(m, dtype="<f4").tobytes())
    write_framed(path, WEIGHTS_MAGIC, WEIGHTS_VERSION, b"".join(parts))


def load_params(path) -> tuple[EncoderParams, EncoderConfig]:
    payload = read_framed(path, WEIGHTS_MAGIC, WEIGHTS_VERSION)
    cur = Cursor(payload)
    d_in, hidden, dropout, l2norm, n_layers = cur.take("IIfBB")
    mats = []
    for _ in range(2 * n_layers):
        rows, cols = cur.take("II")
        mats.append(np.frombuffer(cur.take_bytes(4 * rows * cols),
                                  dtype="<f4").reshape(rows, cols).copy())
    cur.expect_end()
    params = EncoderParams(w_self=[mats[0], mats[2]], w_neigh=[mats[1], mats[3]])
    if params.d_in != d_in or params.hidden != hidden:
        raise ShapeMismatch("checkpoint header disagrees with matrix shapes")
    return params, EncoderConfig(dropout=float(dropout), final_l2_normalize=bool(l2norm))
