"""Exception types raised across the package."""


class FidsusError(Exception):
    """Base class for all package errors."""


class SizingError(FidsusError, ValueError):
    """A requested Hilbert space or enumeration is too large."""


class DegenerateGroundStateError(FidsusError):
    """The ground state is (numerically) degenerate, so fidelity is ill defined."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class ConvergenceError(FidsusError):
    """An iterative solver did not reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NumericalBreakdownError(FidsusError):
    """A Krylov projection produced values that violate basic sanity bounds."""


class CoverageError(FidsusError):
    """A flat-histogram walk failed to visit some energy bins often enough."""

    def __init__(self, message, missing=()):
        super().__init__(message)
        self.missing = tuple(missing)
