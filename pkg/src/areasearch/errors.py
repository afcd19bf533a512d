"""Exception types shared across the package."""


class AreaSearchError(Exception):
    """Base class for all errors raised by this package."""


class NumericDomainError(AreaSearchError):
    """A field or parameter contains non-finite or otherwise invalid numbers."""


class OutOfDomainError(AreaSearchError):
    """A queried point lies outside the domain rectangle."""


class DegeneratePriorError(AreaSearchError):
    """A target prior has zero or negative total mass, or an empty support."""


class GridMismatchError(AreaSearchError):
    """Two fields that must share a grid do not."""


class SolverFailureError(AreaSearchError):
    """The linear solver did not reach the requested tolerance."""

    def __init__(self, message, residual=None, iters=None):
        super().__init__(message)
        self.residual = residual
        self.iters = iters


class ConfigError(AreaSearchError):
    """A scenario configuration is malformed; carries the offending key."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
