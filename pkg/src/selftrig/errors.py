"""Exception types shared across the package."""


class SelftrigError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SelftrigError):
    """Raised when a configuration file or parameter set is invalid."""


class UnrealizableError(SelftrigError):
    """Raised when no controller exists for the requested objective.

    Carries optional diagnostics about which initial states were losing.
    """

    def __init__(self, message: str, losing_states=None):
        super().__init__(message)
        self.losing_states = losing_states


class InvariantError(SelftrigError):
    """An internal consistency check failed; indicates a bug or bad input data."""


class UncontrollableStateError(SelftrigError):
    """A closed-loop run reached a state the controller has no move for."""
