"""Kalman filter and unbiased square-root ensemble Kalman filter.

Ensembles are ``(n, N)`` arrays with one member per column.
"""

from ._core import *  # noqa: F401,F403
from ._core import (  # noqa: F401
    ConfigError,
    Error,
    InsufficientData,
    InvalidInput,
    NotPsdError,
    NotSpdError,
    NumericalError,
    ShapeError,
)

__version__ = "0.3.0"
