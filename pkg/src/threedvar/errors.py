"""Exception types shared across the package."""


class ThreeDVarError(Exception):
    """Base class for all package errors."""


class ConfigError(ThreeDVarError, ValueError):
    """Invalid parameters or experiment configuration."""


class Divergence(ThreeDVarError, ArithmeticError):
    """A state left the overflow guard during time integration.

    Usually means the step size is too large for the scheme.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class GridMismatch(ThreeDVarError, ValueError):
    """Time grids that must nest exactly do not."""


class SingularInnovation(ThreeDVarError, ArithmeticError):
    """Innovation covariance Gamma + H C H* is not positive."""


class DegenerateParams(ThreeDVarError, ValueError):
    """Parameters hit a removable singularity of a bound formula (alpha == 1)."""


class NoContraction(ThreeDVarError):
    """The discrete contraction factor M(tau) never drops below one."""


class MissingColumn(ThreeDVarError, KeyError):
    """A CSV file lacks a column needed for plotting."""

    def __str__(self):
        # KeyError would repr() the message
        return str(self.args[0]) if self.args else ""
