"""Exception and warning types raised by icmtest."""


class IcmError(Exception):
    """Base class for all icmtest errors."""


class NonFinite(IcmError, ValueError):
    pass


class TooFewRows(IcmError, ValueError):
    pass


class DimensionMismatch(IcmError, ValueError):
    pass


class NotSymmetric(IcmError, ValueError):
    pass


class NotPositiveDefinite(IcmError, ValueError):
    """Raised when a matrix has an eigenvalue at or below the SPD threshold.

    ``smallest_eigenvalue`` holds the offending eigenvalue.
    """

    def __init__(self, message, smallest_eigenvalue=None):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue


class NoConvergence(IcmError, RuntimeError):
    pass


class NonGaussianWeight(IcmError, ValueError):
    pass


class SingularMixing(IcmError, ValueError):
    pass


class NearSingularDesign(IcmError, ValueError):
    pass


class IcaFailure(IcmError, RuntimeError):
    """ICA re-estimation failed; ``replicate`` is the resample index if any."""

    def __init__(self, message, replicate=None):
        super().__init__(message)
        self.replicate = replicate


class ParseError(IcmError, ValueError):
    """Input file could not be parsed. ``line`` is 1-based, 0 for empty input."""

    def __init__(self, message, line=0, column=None):
        loc = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{message} ({loc})")
        self.line = line
        self.column = column


class ConfigError(IcmError, ValueError):
    pass


class DegenerateKurtosisWarning(UserWarning):
    """FOBI eigenvalues nearly coincide, so the unmixing rotation is unstable."""
