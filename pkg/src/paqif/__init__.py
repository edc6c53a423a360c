"""PAQIF: parallel direct solvers for banded systems and LCPs, TVD
convection-diffusion splittings, and steady EHL contact solvers."""

from .bandcore import (BandedMatrix, band_matvec, cholesky_spd_solve,
                       is_diagonally_dominant, project_nonneg)
from .aqif import WZFactors, aqif_solve, factorize_wz, solve_w, solve_z
from .errors import (ContractViolationError, FactorizationBreakdownError,
                     NonConvergenceError, NotPositiveDefiniteError,
                     PaqifError, PartitionError, UnsupportedOrderError)

__version__ = "0.1.0"
