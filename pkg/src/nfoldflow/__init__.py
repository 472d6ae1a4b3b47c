"""Exact-integer Graver bases, n-fold integer programming by augmentation,
and integer multicommodity transshipment/transportation solvers."""

from ._backend import backend_name
from .errors import (
    BudgetExceededError,
    InputError,
    NFoldFlowError,
    OracleEvaluationError,
)
from .lattice import (
    Bimatrix,
    Digraph,
    IntMatrix,
    IntVector,
    conformal_leq,
    incidence_matrix,
    kernel_basis,
    nfold_product,
    solve_integer,
    special_product,
)
from .graver import (
    Budget,
    GraverBasis,
    assemble_extended_matrix,
    extended_nfold_graver,
    graver_basis,
    graver_complexity,
    nfold_graver,
)

__version__ = "0.1.0"
