"""Exception hierarchy shared by the solver, optimizer and CLI."""


class RailCommuteError(Exception):
    """Base class for all package errors."""


class DomainError(RailCommuteError, ValueError):
    """An argument lies outside the domain of a function."""


class FeasibilityError(RailCommuteError, ValueError):
    """Cost parameters violate alpha > beta."""


class InfeasibleStateError(RailCommuteError):
    """A (q, k) pair admits no passenger arrival rate in [0, mu).

    ``train`` carries the offending train index when raised from a series.
    """

    def __init__(self, message, train=None):
        super().__init__(message)
        self.train = train


class NoRealSolutionError(RailCommuteError):
    """The FCF quadratic has a negative discriminant."""


class SolverError(RailCommuteError):
    """An iterative search failed to converge or to bracket a root."""


class EmptyResultError(RailCommuteError):
    """A grid search found no feasible point; ``surface`` holds what was evaluated."""

    def __init__(self, message, surface=None):
        super().__init__(message)
        self.surface = surface


class ConfigError(RailCommuteError):
    """Base for configuration problems."""


class ConfigParseError(ConfigError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigValidationError(ConfigError):
    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("invalid configuration: " + "; ".join(self.failures))
