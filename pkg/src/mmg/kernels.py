"""Backend selection for the sampling kernels.

Prefers the compiled extension; falls back to the NumPy implementation when
it is not built. ``MMG_FORCE_NUMPY=1`` forces the fallback (used by the
benchmark and the backend-equivalence tests). Both backends are
bit-identical, so the choice never changes results, only speed.
"""

from __future__ import annotations

import os

from . import _kernels_np as numpy_backend

try:
    from . import _native as native_backend
except ImportError:
    native_backend = None

_forced = os.environ.get("MMG_FORCE_NUMPY", "") not in ("", "0")

if native_backend is not None and not _forced:
    BACKEND = "native"
    random_walk_pairs = native_backend.random_walk_pairs
    fanout_sample = native_backend.fanout_sample
else:
    BACKEND = "numpy"
    random_walk_pairs = numpy_backend.random_walk_pairs
    fanout_sample = numpy_backend.fanout_sample
