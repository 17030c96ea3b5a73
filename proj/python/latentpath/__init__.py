"""Structural equation modeling: model parsing, ML estimation, fit indices,
psychometrics, exploratory factor analysis and effect decomposition."""

from ._latentpath import *  # noqa: F401,F403
from ._latentpath import (  # noqa: F401
    Error,
    SyntaxError,
    ModelError,
    DataError,
    NumericalError,
    IdentificationError,
    ConvergenceError,
)

__version__ = "0.1.0"
