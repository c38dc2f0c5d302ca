"""Bi-Hamiltonian structure of the linear and cubic nonlinear Schrodinger equations."""

from .grid import Grid1D, PhasePair, fd_gradient, make_grid, random_state
from .structures import (
    Canonical,
    LinearDiag,
    NlsNonlocal,
    NlsRecursion,
    SchrodingerOperator,
    SchrodingerWeighted,
    jacobi_residual,
    poisson_bracket,
)
from .functionals import K0, K1, Hn, Kminus1, involution_matrix, recursion_consistency
from .dynamics import IntegratorSpec, NlsParams, madelung_consistency, run

__version__ = "0.1.0"
