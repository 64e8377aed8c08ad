"""Stable linear state-space identification (C++ core via pybind11)."""

from ._simba import *  # noqa: F401,F403
from ._simba import (
    ConfigError,
    DimensionError,
    DivergenceError,
    ParseError,
    SimbaError,
    SingularMatrixError,
)

__all__ = [name for name in dir() if not name.startswith("_")]
