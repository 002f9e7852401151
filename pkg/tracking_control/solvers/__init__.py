from .fields import (
    SpaceTimeField,
    BoundaryControls,
    ObservationSet,
    PointSourceTable,
    point_source_table
)
from .time_stepping import (
    FactorCache,
    factor_cache,
    solve_forward,
    solve_adjoint,
    solve_window_backward,
    solve_adjoint_transposed
)
