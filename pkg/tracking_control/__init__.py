from .pint_setup import *
from .errors import (
    TrackingError,
    ConfigError,
    NumericalError,
    ConstructionError,
    SmoothingRequiredError
)
from .logging_config import configure_logging
