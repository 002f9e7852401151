# Demo: Two boundary controls and two observation points. Both points follow a
# ramp, the second one at half the height of the first.
import numpy as np
from tracking_control.discretization import CoefficientSet, build_mesh, build_time_grid
from tracking_control.solvers import ObservationSet
from tracking_control.duality import TrackingProblem, DualObjective, recover_controls, tracking_error
from tracking_control.optimization import minimize, OptimOptions


mesh = build_mesh(1.0, 100)
timegrid = build_time_grid(1.0, dt=2e-3)

t = timegrid.solve_times
ramp = t * (1 - np.exp(-t))

problem = TrackingProblem(
    mesh, timegrid, CoefficientSet.constant(1.0),
    observations=ObservationSet((0.25, 0.5)),
    targets=np.stack([ramp, 0.5 * ramp]),
    sides=('left', 'right'),
    epsilon=1e-3
)

objective = DualObjective(problem)
f, report = minimize(objective.value, objective.gradient, np.zeros(problem.dimension), OptimOptions())

controls = recover_controls(problem, f)
errors = tracking_error(problem, controls)
for i, e in enumerate(errors.per_target, start=1):
    print(f"E_{i} = {e:.6e}")
print(f"combined error {errors.combined:.6e} for epsilon = {problem.epsilon}")
print(f"{objective.adjoint_solves} adjoint solves, {report.iterations} iterations ({report.reason})")
