"""Exception types shared across the package."""


class RvcvError(Exception):
    """Base class for all package errors."""

    exit_code = 1
    category = "error"


class InvalidArgumentError(RvcvError, ValueError):
    exit_code = 2
    category = "invalid-argument"


class ConfigError(InvalidArgumentError):
    category = "config"


class DegenerateDesignError(RvcvError, ArithmeticError):
    """Empirical variance matrix of the control variates is (near) singular."""

    exit_code = 3
    category = "degenerate-design"

    def __init__(self, message, condition_number=float("inf")):
        super().__init__(message)
        self.condition_number = condition_number


class NumericalDegeneracyError(RvcvError, ArithmeticError):
    """Diffusion matrix is singular along a path, even after regularisation."""

    exit_code = 3
    category = "numerical-degeneracy"

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ResourceError(RvcvError, MemoryError):
    """Requested exact computation is too large to run."""

    exit_code = 4
    category = "resource"


class SimulationError(RvcvError, RuntimeError):
    """A forward simulation or a parallel job failed."""

    exit_code = 5
    category = "simulation"


class MixingWarning(UserWarning):
    """An inner sampler showed no acceptances over a monitoring window."""


class GridResolutionWarning(UserWarning):
    """Quadrature grid is too coarse for the requested accuracy."""
