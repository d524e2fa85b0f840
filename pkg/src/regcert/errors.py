"""Exception types shared across the toolkit."""


class RegcertError(Exception):
    """Base class for all toolkit errors."""


class InvalidGridError(RegcertError):
    """Grid has too few nodes or values do not match the grid."""


class GridMismatchError(RegcertError):
    """Two sampled functions live on different grids."""


class InvalidExponentError(RegcertError):
    """Smoothness exponent outside the supported range [0, 2]."""


class InvalidModelError(RegcertError):
    """Unknown noise model tag."""


class UnsupportedExponentError(RegcertError):
    """Difference regularizer asked for an exponent a <= 1."""


class StepTooLargeError(RegcertError):
    """Snapped differentiation step reached half the interval."""


class ResolutionError(RegcertError):
    """Grid too coarse to resolve the requested bump width."""


class EmptyAdmissibleSetError(RegcertError):
    """No sampled candidate passed the admissibility test."""


class InvalidSourceError(RegcertError):
    """Source-set parameters outside their domain."""


class InvalidParameterError(RegcertError):
    """Regularization parameter or other scalar input out of range."""


class InvalidMatrixError(RegcertError):
    """Matrix input rejected (non-finite entries, wrong shape, too large)."""


class InfeasibleError(RegcertError):
    """Constraint set is empty for the given data."""


class DegenerateProblemError(RegcertError):
    """Operator has no usable spectrum (all singular values zero)."""


class UsageError(RegcertError):
    """Bad command line or config file input."""
