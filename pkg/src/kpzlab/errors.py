"""Exception hierarchy shared by all kpzlab modules."""


class KpzLabError(Exception):
    """Base class for all errors raised by this package."""


class GridMismatchError(KpzLabError):
    """Two objects that must share a grid (space or time) do not."""


class DomainError(KpzLabError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class ResolutionError(KpzLabError):
    """A kernel is not resolved by the grid.

    Carries the minimum number of points that would resolve it.
    """

    def __init__(self, message, min_n_points=None):
        super().__init__(message)
        self.min_n_points = min_n_points


class PositivityError(KpzLabError):
    """A field that must be strictly positive is not."""


class InstabilityError(KpzLabError):
    """A time stepper produced non-finite or runaway values.

    Carries the step index at which the blow-up was detected.
    """

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class McUndersamplingError(KpzLabError):
    """A Monte Carlo estimate is too noisy to be usable (e.g. u <= 0)."""


class QuadratureWindowError(KpzLabError):
    """The endpoint quadrature window does not fit inside the safe region."""


class ConfigError(KpzLabError):
    """Invalid experiment configuration; the message names the field."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NoiseFileError(KpzLabError):
    """A persisted noise file is malformed or incompatible with the config."""
