from .mesh import Mesh, TimeGrid, GridSignal, build_mesh, build_time_grid
from .coefficients import CoefficientSet, CoefficientFunction
from .tridiagonal import TridiagonalMatrix, ThomasFactorization
from .assembly import (
    assemble_mass,
    assemble_operator,
    dirac_load,
    dirac_weights,
    trace,
    boundary_flux,
    discrete_norm,
    Side
)
