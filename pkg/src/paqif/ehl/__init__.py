from .params import (EhlParams, hertzian_init, line_dimensionless,
                     moes_from_line, moes_convert, point_dimensionless,
                     rheology)
from .kernels import (DeformationKernel, kernel_line, kernel_point,
                      load_kernel_cache, save_kernel_cache)
from .film import FilmModel
from .solver import EhlState, solve_ehl
from .sweeps import (force_balance_update, hybrid_select, newton_line_sweep,
                     splitting_ls4, splitting_ls5, weighted_change_sweep)
