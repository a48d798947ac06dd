"""Exception hierarchy.

Every exception carries the process exit code the command line tool uses
when it escapes a subcommand.
"""


class LatticeScatteringError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ValidationError(LatticeScatteringError, ValueError):
    """Rejected input: wrong shape, out-of-range parameter, missing values."""

    exit_code = 2


class ThresholdEnergyError(ValidationError):
    """The energy is an integer, where the gradient of the symbol vanishes."""

    def __init__(self, lam):
        super().__init__(f"threshold energy: lambda={lam!r} is an integer, "
                         "the energy surface is singular there")
        self.lam = lam


class NumericalError(LatticeScatteringError):
    """An iterative or extrapolation procedure failed to reach its target."""

    exit_code = 3


class GateFailure(LatticeScatteringError):
    """A built-in numerical consistency check did not pass."""

    exit_code = 3

    def __init__(self, name, value, tolerance, detail=""):
        msg = f"gate '{name}' failed: {value:.3e} > {tolerance:.3e}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.name = name
        self.value = value
        self.tolerance = tolerance


class ExceptionalEnergyError(LatticeScatteringError):
    """A linear system that should be invertible at this energy is singular.

    Raised for Dirichlet eigenvalues of the interior problem, singular
    Lippmann-Schwinger systems and singular single-layer matrices.
    """

    exit_code = 4

    def __init__(self, message, condition=None):
        if condition is not None:
            message = f"{message} (condition number {condition:.3e})"
        super().__init__(message)
        self.condition = condition


class SubdomainSingularError(ExceptionalEnergyError):
    """The partial-domain Dirichlet system inside a reconstruction sweep is singular."""
