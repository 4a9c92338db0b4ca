"""Multi-modal (image + tag) graph embedding and retrieval engine."""

__version__ = "0.1.0"

from .graph import EdgeKind, MultiModalGraph, NodeKind  # noqa: F401
