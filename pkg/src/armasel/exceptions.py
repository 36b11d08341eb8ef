"""Exception hierarchy shared across the package."""


class ArmaError(Exception):
    """Base class for errors raised by this package."""


class NonStationaryError(ArmaError):
    """Raised when AR coefficients place a root on or inside the unit circle."""


class NonInvertibleError(ArmaError):
    """Raised when MA coefficients place a root on or inside the unit circle."""


class NotPositiveDefiniteError(ArmaError):
    """Raised when a matrix that must be positive definite is not."""


class FitError(ArmaError):
    """Raised when parameter estimation cannot produce a usable model."""
