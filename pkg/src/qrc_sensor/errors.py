"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2,
numerical failures exit 3, I/O problems exit 4.
"""


class QrcError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(QrcError, ValueError):
    """A caller violated a documented precondition."""


class ConfigError(QrcError):
    """Bad experiment configuration; carries the offending key path."""

    def __init__(self, message, key=None):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class TruncationError(QrcError):
    """Fock-space cutoff too small for the requested state."""

    def __init__(self, message, required_cutoff=None):
        self.required_cutoff = required_cutoff
        if required_cutoff is not None:
            message = f"{message} (suggest cutoff >= {required_cutoff})"
        super().__init__(message)


class NumericalConsistencyError(QrcError):
    """An internal numerical self-check failed (e.g. imaginary residue)."""


class DegenerateSamplingError(QrcError):
    """Rejection sampling acceptance rate collapsed below the usable floor."""


class DivergenceError(QrcError):
    """Too many stochastic trajectories diverged, or training blew up."""


class ConvergenceError(QrcError):
    """An iterative numerical routine failed to converge."""
