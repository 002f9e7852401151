from .trajectory import Trajectory
from .diffeomorphism import (
    DiffeoMap,
    build_single_diffeo,
    build_double_diffeo,
    determinant_signs,
    invert
)
from .pullback import transform_coefficients, compose, pullback_mismatch
