"""Exception types shared across the package."""


class KakeyaLabError(Exception):
    pass


class PreconditionError(KakeyaLabError, ValueError):
    """An input violates a documented precondition of an operation."""


class DegeneracyError(KakeyaLabError, ValueError):
    """Input geometry is degenerate (coplanar, parallel, singular, ...)."""


class ResourceError(KakeyaLabError, RuntimeError):
    """A request would exceed a configured size or time budget."""


class VerificationError(KakeyaLabError, RuntimeError):
    """An internal self-check of a constructed object failed."""
