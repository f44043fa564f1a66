"""Symbolic self-triggered controller synthesis.

Builds finite abstractions of continuous-time nonlinear systems under
bounded disturbance, compiles temporal objectives into parity
annotations, solves the resulting mean-payoff parity games, and
extracts controllers whose average transmission interval beats a
requested threshold.
"""

from .errors import (
    ConfigError,
    InvariantError,
    SelftrigError,
    UncontrollableStateError,
    UnrealizableError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "InvariantError",
    "SelftrigError",
    "UncontrollableStateError",
    "UnrealizableError",
    "__version__",
]
