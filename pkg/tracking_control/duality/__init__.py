from .problem import TrackingProblem, DualForcing, CONTROL_SIDES
from .functional import (
    adjoint_state,
    step_fluxes,
    recover_controls,
    evaluate_J,
    evaluate_gradient,
    observed_traces,
    tracking_error,
    duality_residual,
    TrackingErrors,
    DualObjective
)
