"""Exception types raised across the package."""


class FracScalarError(Exception):
    """Base class for all package errors."""


class SymmetryViolation(FracScalarError):
    """Spectral data or a multiplier breaks the conjugate symmetry of a real field."""


class MeanNotZero(FracScalarError):
    """A negative-order operator was applied to a field with nonzero mean."""


class TruncationTooSmall(FracScalarError):
    """Estimated lattice-tail error of a kernel quadrature exceeds its budget."""

    def __init__(self, message, tail_estimate=None, result_norm=None):
        super().__init__(message)
        self.tail_estimate = tail_estimate
        self.result_norm = result_norm


class NegativeInput(FracScalarError):
    """A field required to be non-negative has a significantly negative value."""


class GridTooLarge(FracScalarError):
    """An O(n^4) diagnostic was requested on a grid above its size limit."""


class ConfigError(FracScalarError):
    """Invalid run or sweep configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class HypothesisNotMet(FracScalarError):
    """A bound monitor was asked to evaluate outside its hypothesis."""


class Unstable(FracScalarError):
    """The solution left the representable range (non-finite or above the blowup cap)."""

    def __init__(self, message, t=None, linf=None):
        super().__init__(message)
        self.t = t
        self.linf = linf
