"""ionlab: desk-scale numerical laboratory for mean-field atomic models
and classical Coulomb variational problems.

Subpackages cover a shared radial discretization, operator-inequality
certificates, three mean-field solvers (gradient-free, gradient-
corrected, and product-state), a finite-basis orbital theory with an
exact-diagonalization oracle, classical point-charge functionals, and
the liquid drop model, all behind one CLI.
"""

__version__ = "0.1.0"

from . import classical, drop, hartree, hf, opchecks, radial, tf, tfw  # noqa: F401
from .errors import (  # noqa: F401
    BasisError,
    CapacityError,
    ConvergenceError,
    DomainError,
    FormatError,
    IonlabError,
    ParameterError,
)
