"""Exception types raised across the package."""


class QcxError(Exception):
    """Base class for all library errors."""


class ImproperFunctionError(QcxError):
    """The function is +inf on the whole grid, or takes -inf somewhere."""


class MissingDerivativesError(QcxError):
    """A derivative oracle is required but was not supplied."""


class InfiniteIndexError(QcxError):
    """A finite convexity index was required but an infinite one was given."""


class NegativeIndexError(QcxError):
    """A nonnegative convexity index was required."""


class BudgetExceededError(QcxError):
    """A grid or sampling budget would be exceeded."""


class InverseMismatchError(QcxError):
    """A declared inverse does not invert its function on probe points."""


class NotGMeasurableError(QcxError):
    """A risk measure returned a vector that is not constant on some atom."""

    def __init__(self, atom_index: int, spread: float):
        self.atom_index = atom_index
        self.spread = spread
        super().__init__(
            f"output is not measurable: varies by {spread:.3e} on atom {atom_index}"
        )


class NotNormalizedError(QcxError):
    """A risk measure with rho(0) != 0 was passed to a normalized-only check."""


class RankDeficientError(QcxError):
    """Gram-Schmidt input vectors are linearly dependent."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"input vector {index} lies in the span of its predecessors")


class AssumptionViolatedError(QcxError):
    """A structural hypothesis of the requested check does not hold."""


class ConfigError(QcxError):
    """A run configuration file is malformed or references undeclared names."""


class CapTooSmallWarning(UserWarning):
    """An infinite index was reported purely because the lambda cap was reached."""
