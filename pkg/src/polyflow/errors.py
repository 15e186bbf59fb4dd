"""Exception types shared across the package."""


class PolyflowError(Exception):
    """Base class for all package errors."""


class InvalidInputError(PolyflowError, ValueError):
    """Arguments violate a documented precondition."""


class SizeCapError(PolyflowError):
    """An exhaustive enumeration would exceed its configured size cap.

    Attributes
    ----------
    size : int
        The size that was requested.
    cap : int
        The configured limit.
    where : str
        Free-form location (node id, oracle description) for diagnostics.
    """

    def __init__(self, size, cap, where=""):
        self.size = size
        self.cap = cap
        self.where = where
        msg = f"size {size} exceeds cap {cap}"
        if where:
            msg += f" at {where}"
        super().__init__(msg)


class SolverError(PolyflowError):
    """The LP backend did not return an optimal solution."""

    def __init__(self, message, stats=None):
        self.stats = stats
        super().__init__(message)


class ParseError(PolyflowError):
    """An input file is not well-formed JSON or misses a required field."""
