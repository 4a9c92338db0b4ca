"""Counter-based pseudo-randomness used by every sampling path.

All sampling in this package draws from a stateless splitmix64-style
generator: ``rand_u64(seed, counter)`` is a pure function, so a draw is
addressed by *what it is for* (a derived seed plus a slot counter) rather
than by *when it happens*. This is what makes the compiled and the NumPy
sampling backends produce bit-identical streams, and what makes parallel
or vectorized evaluation order-independent.

The same arithmetic is reimplemented in C inside ``_native.pyx``; any
change here must be mirrored there.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# stream purposes, mixed into derived seeds
WALKS = 0x01
FANOUT = 0x02
NEGATIVES = 0x03
DEGREE_CAP = 0x04
DROPOUT = 0x05
SHUFFLE = 0x06


def mix64(z: int) -> int:
    """splitmix64 finalizer on a plain Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *words: int) -> int:
    """Fold purpose/epoch/batch words into a sub-stream seed."""
    s = mix64(seed)
    for w in words:
        s = mix64(((s + GOLDEN) & MASK64) ^ mix64(w))
    return s


def rand_u64(seed: int, counters: np.ndarray) -> np.ndarray:
    """Vectorized draw: one uint64 per counter."""
    z = (np.uint64(seed) + (counters + np.uint64(1)) * np.uint64(GOLDEN))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def rand_u64_scalar(seed: int, counter: int) -> int:
    return mix64((seed + ((counter + 1) * GOLDEN)) & MASK64)


def bounded(r: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Map uint64 draws onto [0, n) via the top-32-bit multiply-shift.

    Exact in uint64 arithmetic for n < 2**32; bias is at most n / 2**32.
    """
    return ((r >> np.uint64(32)) * n) >> np.uint64(32)


def bounded_scalar(r: int, n: int) -> int:
    return (((r >> 32) * n) >> 32) & MASK64


def rand_unit(r: np.ndarray) -> np.ndarray:
    """uint64 draws to float64 in [0, 1), using the top 53 bits."""
    return (r >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
