"""Exception types shared across the package."""


class MbTrackError(Exception):
    """Base class for all package-specific errors."""


class AllWeightsZeroError(MbTrackError, ValueError):
    """Total particle weight is zero (or numerically indistinguishable from it)."""


class DegenerateGeometryError(MbTrackError, ValueError):
    """Object coincides with the sensor, so bearing/range is undefined."""


class NonFiniteLikelihoodError(MbTrackError, ArithmeticError):
    """A measurement likelihood evaluated to NaN or infinity."""


class NonSquareError(MbTrackError, ValueError):
    """Assignment cost matrix is not square."""


class NonFiniteError(MbTrackError, ValueError):
    """Numeric input contains NaN or infinity where finite values are required."""


class DimensionMismatchError(MbTrackError, ValueError):
    """Point sets passed to a metric have inconsistent dimensions."""


class ConfigError(MbTrackError, ValueError):
    """Scenario configuration is missing, malformed, or inconsistent."""
