"""Exception hierarchy shared across the package."""


class CrowdAllocError(Exception):
    pass


class DomainError(CrowdAllocError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(CrowdAllocError, ValueError):
    """Invalid experiment or analysis configuration.

    ``key`` names the offending configuration entry when one can be
    identified, so the CLI can report it in machine-readable form.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class AllocationError(CrowdAllocError):
    """No eligible task exists for the arriving worker."""


class DuplicateLabelError(CrowdAllocError, ValueError):
    """The (task, worker) pair already has a label."""


class ConvergenceError(CrowdAllocError, RuntimeError):
    """A required numerical computation did not converge."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket
