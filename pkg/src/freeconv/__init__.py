"""Free additive convolution of spectral measures.

Numerical solver for the subordination equations of ``A + U* B U``,
closed-form reference laws and Monte Carlo checks with Haar unitaries.
"""
from .closed_forms import (
    arcsine_self_conv,
    mp_density,
    mp_stieltjes,
    semicircle_add,
    semicircle_law,
    two_atom_self_conv,
)
from .estimators import FreeAdditiveConvolution
from .exceptions import ConvergenceError, DomainError
from .measures import (
    Arcsine,
    Atoms,
    GridDensity,
    Measure,
    Semicircle,
    measure_from_dict,
    moment,
    point_mass,
    shift,
    stieltjes_derivative,
    stieltjes_eval,
    support_bounds,
)
from .solver import (
    DensityEstimate,
    SolverConfig,
    SubordinationState,
    check_r_additivity,
    detect_atoms,
    free_convolve,
    r_transform_eval,
    recover_density,
    solve_at_point,
    solve_on_grid,
)

__version__ = "0.1.0"
