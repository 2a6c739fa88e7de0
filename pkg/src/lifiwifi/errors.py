"""Exception types shared across the package.

The CLI maps these onto its exit codes, so each class corresponds to one
failure category.
"""


class ConfigError(ValueError):
    """Invalid input value or malformed scenario. ``path`` locates it in the config."""

    def __init__(self, message, path=None):
        self.message = message
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class InfeasibleError(ValueError):
    """Constraint set is empty or a constellation violates its caps."""


class BracketError(RuntimeError):
    """A bisection could not bracket its root."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped without meeting its tolerance."""

    def __init__(self, message, partial=None):
        self.partial = partial
        super().__init__(message)
