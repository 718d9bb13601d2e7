"""Exception hierarchy shared across the package."""


class OpintError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(OpintError, ValueError):
    """An input violates a documented precondition or type invariant."""


class CapabilityError(OpintError, RuntimeError):
    """An operation needs data the caller did not supply (analytic
    partials, Fourier metadata, a finer sampling grid)."""


class NumericalError(OpintError, RuntimeError):
    """An underlying numerical routine failed; the message carries the
    backend diagnostic."""
