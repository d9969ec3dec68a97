"""Exception types shared across the package."""


class NlsError(Exception):
    """Base class for package errors."""


class NonIntegrable(NlsError):
    """Adaptive quadrature detected divergence near the origin."""


class ToleranceNotMet(NlsError):
    """Refinement budget exhausted before reaching the requested tolerance."""


class CutoffTooSmall(NlsError):
    """Tail estimate beyond the frequency cutoff exceeds the tolerance."""


class GrowthInsufficient(NlsError):
    """No admissible radius makes the short-range weight dominate the
    quadratic lower-bound family; numerical signature of a sub-quadratic
    short-range profile."""


class BudgetExceeded(NlsError):
    """Node, nonzero, or wall-clock budget exceeded."""


class DimensionMismatch(NlsError):
    """Vector or spec dimensions are incompatible."""


class ZeroVector(NlsError):
    """A nonzero vector was required."""


class OutOfBox(NlsError):
    """Requested construction does not fit inside the grid box."""


class UnsupportedKernel(NlsError):
    """The operation is not implemented for this kernel variant/dimension."""


class CertificateFailed(NlsError):
    """The ratio sweep dipped below the requested constant."""

    def __init__(self, message, point=None, ratio=None):
        super().__init__(message)
        self.point = point
        self.ratio = ratio


class CertificateUnavailable(NlsError):
    """No ratio certificate could be produced for a profile entry."""


class NoConvergence(NlsError):
    """Iterative eigensolver did not converge; partial results attached."""

    def __init__(self, message, iterations=0, partial=None):
        super().__init__(message)
        self.iterations = iterations
        self.partial = partial


class CountUnreliable(NlsError):
    """Ritz saturation near the counting level is ambiguous."""


class ConfigError(NlsError):
    """Base class for configuration problems."""


class ParseError(ConfigError):
    """Config file is not valid JSON; carries line/column."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(ConfigError):
    """Config violates the schema; carries all error locations."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
