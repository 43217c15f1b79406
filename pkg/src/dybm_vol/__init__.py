"""Dynamic Boltzmann machines for time-varying variance and generalized Gaussian noise."""
from .exceptions import DataError, DivergenceError, DybmError, ForecastError
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "DataError", "DivergenceError", "DybmError", "ForecastError"]
