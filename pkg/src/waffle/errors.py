"""Exception hierarchy shared across the toolkit."""


class WaffleError(Exception):
    """Base class for all domain errors raised by this package."""


class EncodingError(WaffleError):
    """Input bytes are not valid UTF-8."""


class EmptyDocument(WaffleError):
    """HTML source contains no element."""


class CoverageError(WaffleError):
    """Token spans overlap, leave gaps, or exceed the source length."""


class AlignmentMismatch(WaffleError):
    """A token alignment disagrees with the tree it is applied to."""


class NoTarget(WaffleError):
    """No eligible element or declaration exists for a mutation category."""


class EmptyList(WaffleError):
    """An operation requiring a nonempty list received an empty one."""


class ZeroVector(WaffleError):
    """A vector with zero norm where cosine similarity is required."""


class NonFinite(WaffleError):
    """A numeric input contains NaN or infinity."""


class DimensionMismatch(WaffleError):
    """Vectors of unequal dimension were combined."""


class DegenerateImage(WaffleError):
    """An image with zero area cannot be compared."""


class RenderError(WaffleError):
    """A render request failed (timeout, protocol error, browser error)."""


class MaskFormatError(WaffleError):
    """A mask file is malformed or has an unsupported version."""
