"""Pseudo-spectral toolkit for Keller-Segel vanishing-diffusivity rates."""

from .grid import (
    Field,
    GridSpec,
    dealias,
    divergence,
    gradient,
    heat_propagate,
    helmholtz_inverse,
    lp_norm,
    make_grid,
    to_fourier,
    to_physical,
)
from .dyadic import (
    BesovParams,
    DataProfile,
    DyadicFamily,
    besov_norm,
    dyadic_block,
    make_data_profile,
    make_dyadic_family,
    make_initial_data,
    smooth_step,
)
from .solver import (
    BlowUpError,
    Decomposition,
    SolverConfig,
    Trajectory,
    decompose,
    ks_rhs,
    solve,
    solve_u1,
    solve_u2,
)

__version__ = "0.1.0"
