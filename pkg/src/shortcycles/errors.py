"""Exception types shared across the package."""


class ShortCyclesError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ShortCyclesError, ValueError):
    """An argument lies outside the domain of the requested quantity."""


class ResourceLimitError(ShortCyclesError):
    """The request would exceed a configured size or iteration limit."""


class AccuracyError(ShortCyclesError, ArithmeticError):
    """A numerical scheme could not reach its accuracy target.

    ``interval`` carries the index of the offending unit interval when the
    failure comes from the piecewise delay-equation solver.
    """

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval
