"""Exception hierarchy shared by all solvers and the CLI.

The CLI maps these onto process exit codes: parameter/domain/basis
problems exit 2, convergence failures exit 3, capacity overruns exit 4.
"""


class IonlabError(Exception):
    """Base class for all package errors."""


class ParameterError(IonlabError, ValueError):
    """Invalid argument values (bad bounds, empty lists, negative tolerances)."""


class DomainError(IonlabError, ValueError):
    """Structurally valid input that violates a mathematical precondition."""


class BasisError(IonlabError, ValueError):
    """One-body basis construction failed (e.g. near-linear dependence)."""


class ConvergenceError(IonlabError, RuntimeError):
    """Iterative solver did not reach its stopping rule."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class CapacityError(IonlabError, RuntimeError):
    """Problem size exceeds a hard resource cap (e.g. Fock sector too large)."""


class FormatError(IonlabError, ValueError):
    """Report payload cannot be represented in the requested output format."""
