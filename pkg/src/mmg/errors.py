"""Exception hierarchy shared across the package.

Everything raised on bad data derives from :class:`MmgError`, which the CLI
maps to exit code 2.
"""


class MmgError(Exception):
    """Base class for all data and contract errors."""


# --- graph construction ---

class DuplicateKey(MmgError):
    pass


class DimensionMismatch(MmgError):
    pass


class NonFiniteFeature(MmgError):
    pass


class SelfLoop(MmgError):
    pass


class KindMismatch(MmgError):
    pass


class DuplicateEdge(MmgError):
    pass


class UnknownNode(MmgError):
    pass


class FrozenGraph(MmgError):
    """Mutation attempted after freeze."""


class NotFrozen(MmgError):
    """Operation requires a frozen graph."""


# --- ingest ---

class EmptyAfterNormalization(MmgError):
    pass


class ZeroVector(MmgError):
    pass


# --- binary formats ---

class IoFailure(MmgError):
    pass


class BadMagic(MmgError):
    pass


class UnsupportedVersion(MmgError):
    pass


class ChecksumMismatch(MmgError):
    pass


# --- encoder / trainer ---

class ShapeMismatch(MmgError):
    pass


class NonFiniteInput(MmgError):
    pass


class NonFiniteActivation(MmgError):
    pass


class DegenerateGraph(MmgError):
    """Graph cannot produce any training pairs."""


# --- index / query ---

class EmptyTable(MmgError):
    pass


class ZeroQuery(MmgError):
    pass


class NoResolvableTags(MmgError):
    pass


class MissingImageFeature(MmgError):
    pass


class EmptyQuery(MmgError):
    pass


# --- evaluation ---

class MissingRanks(MmgError):
    pass


class NoQueries(MmgError):
    pass
