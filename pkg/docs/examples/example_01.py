# Demo: Steer the heat equation on [0, 1 m] with a Dirichlet control at the
# right end so that the temperature at the midpoint follows a sinusoid within
# a tolerance epsilon.
import numpy as np
from tracking_control import Quantity
from tracking_control.discretization import CoefficientSet, build_mesh, build_time_grid
from tracking_control.solvers import ObservationSet
from tracking_control.duality import (
    TrackingProblem,
    DualObjective,
    recover_controls,
    tracking_error
)
from tracking_control.optimization import minimize, OptimOptions

Q_ = Quantity


# Discretization: 100 linear elements, 250 implicit Euler steps on [0, T].
mesh = build_mesh(Q_(1, 'm'), 100)
timegrid = build_time_grid(Q_(0.5, 's'), 250)

# y_t - y_xx = 0 (a = 1, b = c = 0)
coeffs = CoefficientSet.constant(1.0)

# Observation point and the target it has to follow.
t = timegrid.solve_times
target = np.sin(2 * np.pi * 2 * t / timegrid.horizon)

problem = TrackingProblem(
    mesh, timegrid, coeffs,
    observations=ObservationSet((0.5,)),
    targets=target[np.newaxis, :],
    sides=('right',),
    epsilon=1e-1
)

# Minimize the dual functional, starting from f = 0.
objective = DualObjective(problem)
f, report = minimize(objective.value, objective.gradient, np.zeros(problem.dimension), OptimOptions())
print(f"{report.reason} after {report.iterations} iterations, J = {report.objective:.6e}")

# The control is read off the adjoint state; the forward simulation tells how
# well it tracks.
controls = recover_controls(problem, f)
errors = tracking_error(problem, controls)
print(f"E_1 = {errors.per_target[0]:.6e} (epsilon = {problem.epsilon})")
print(f"max |v_L| = {np.max(np.abs(controls.right)):.3f}")
