"""Exception hierarchy shared by all modules."""


class DMSError(Exception):
    """Base class for package errors."""


class InvalidInputError(DMSError, ValueError):
    """Non-finite samples, bad parameters, malformed configs."""


class CommensurabilityError(InvalidInputError):
    """A shift or boost is not representable exactly on the grid."""


class ResolutionError(InvalidInputError):
    """The grid cannot resolve or contain the requested field."""


class UndefinedDensityError(DMSError, ValueError):
    """Density requested at a fold point or outside the support."""


class DegenerateError(DMSError, ValueError):
    """A quantity divides by zero (e.g. a constant field in R(lambda, h))."""


class UnsupportedError(DMSError, NotImplementedError):
    """The operation does not support this kind of input."""


class UnboundedBelowError(DMSError):
    """All restarts diverged: the energy appears unbounded from below."""

    def __init__(self, message, energies=None):
        super().__init__(message)
        self.energies = energies or []
