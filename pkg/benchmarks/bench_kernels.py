"""Benchmark the compiled sampling kernels against the NumPy fallback.

Builds a synthetic graph at production-ish scale, times random-walk pair
generation and fanout sampling on both backends, and verifies the outputs
are bit-identical (they share the counter-based RNG, so they must be).

Usage: python benchmarks/bench_kernels.py [--nodes N] [--degree D]
"""

import argparse
import time

import numpy as np

from mmg import _kernels_np as numpy_backend
from mmg import kernels


def synthetic_csr(n_nodes, avg_degree, seed=0):
    rng = np.random.default_rng(seed)
    deg = rng.poisson(avg_degree, n_nodes).astype(np.int64)
    indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    indices = rng.integers(0, n_nodes, int(indptr[-1])).astype(np.int64)
    return indptr, indices


def timed(fn, *args, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=100_000)
    ap.add_argument("--degree", type=int, default=12)
    ap.add_argument("--walks-per-node", type=int, default=10)
    ap.add_argument("--walk-length", type=int, default=5)
    ap.add_argument("--fanout", type=int, default=25)
    args = ap.parse_args()

    indptr, indices = synthetic_csr(args.nodes, args.degree)
    print(f"graph: {args.nodes} nodes, {indices.shape[0]} directed slots")
    if kernels.native_backend is None:
        print("native kernels not built; only the NumPy backend will run")

    rows = []
    walk_args = (indptr, indices, args.walks_per_node, args.walk_length, 42)
    t_np, out_np = timed(numpy_backend.random_walk_pairs, *walk_args)
    rows.append(("random_walk_pairs", "numpy", t_np, out_np[0].shape[0]))
    if kernels.native_backend is not None:
        t_nat, out_nat = timed(kernels.native_backend.random_walk_pairs, *walk_args)
        rows.append(("random_walk_pairs", "native", t_nat, out_nat[0].shape[0]))
        assert np.array_equal(out_np[0], out_nat[0])
        assert np.array_equal(out_np[1], out_nat[1])

    parents = np.arange(args.nodes, dtype=np.int64)
    fan_args = (indptr, indices, parents, args.fanout, 7)
    t_np, fan_np = timed(numpy_backend.fanout_sample, *fan_args)
    rows.append(("fanout_sample", "numpy", t_np, fan_np.shape[0]))
    if kernels.native_backend is not None:
        t_nat, fan_nat = timed(kernels.native_backend.fanout_sample, *fan_args)
        rows.append(("fanout_sample", "native", t_nat, fan_nat.shape[0]))
        assert np.array_equal(fan_np, fan_nat)

    print(f"\n{'kernel':<20} {'backend':<8} {'best time':>10} {'outputs':>12}")
    for name, backend, t, size in rows:
        print(f"{name:<20} {backend:<8} {t * 1000:>8.1f}ms {size:>12}")

    by_kernel = {}
    for name, backend, t, _ in rows:
        by_kernel.setdefault(name, {})[backend] = t
    for name, times in by_kernel.items():
        if "native" in times:
            print(f"{name}: native is {times['numpy'] / times['native']:.1f}x "
                  "faster (outputs bit-identical)")


if __name__ == "__main__":
    main()
