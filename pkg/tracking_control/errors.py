class TrackingError(Exception):
    """Base class of the errors raised by this package."""


class ConfigError(TrackingError, ValueError):
    """An experiment configuration is invalid.

    Attribute `field` holds the dotted path of the offending entry, e.g.
    `'discretization.elements'`.
    """
    def __init__(self, field: str, message: str) -> None:
        self.field = field
        super().__init__(f"{field}: {message}")


class NumericalError(TrackingError, ArithmeticError):
    """A linear system is singular or a computation produced non-finite
    values."""


class ConstructionError(NumericalError):
    """The parameter selection of a diffeomorphism did not succeed."""


class SmoothingRequiredError(NumericalError):
    """The gradient of the norm term is requested at f = 0 without
    smoothing (delta = 0)."""
