class DybmError(ValueError):
    """Base class for errors raised by this package."""


class DataError(DybmError):
    """Malformed or degenerate input data."""


class DivergenceError(DybmError):
    """An online update or fit produced nonfinite values."""


class ForecastError(DybmError):
    """The closed-form forecaster cannot handle the supplied parameters."""
