# Demo: Exact controls for polynomial targets.
#
# For y_t = y_xx, prescribing the trace w1(t) = y(t, x1) and the flux
# w2(t) = y_x(t, x1) at one interior point fixes the whole solution as a
# power series in (x - x1). Its values at the ends are the controls.
import numpy as np
from tracking_control.discretization import CoefficientSet, build_mesh, build_time_grid
from tracking_control.solvers import solve_forward
from tracking_control.flatness import SeriesTarget, build_series, series_controls


targets = SeriesTarget.from_expressions(w1='t**2', w2=0)
solution = build_series(targets, x1=0.5)
print(f"y(t, x) = {solution.symbolic}")

controls = series_controls(solution)
t = np.linspace(0.0, 1.0, 5)
print("v0(t):", controls.left(t))
print("vL(t):", controls.right(t))

# Feed the sampled controls to the finite element solver. The initial state
# of the series is not zero, so the trace only settles on t**2 after a short
# transient.
for elements, steps in ((20, 500), (40, 2000), (80, 8000)):
    mesh, timegrid = build_mesh(1.0, elements), build_time_grid(1.0, steps)
    state = solve_forward(mesh, timegrid, CoefficientSet.constant(1.0), controls.sampled(timegrid))
    times = timegrid.solve_times
    late = times >= 0.25
    error = np.max(np.abs(state.traces(0.5)[late] - times[late] ** 2))
    print(f"N_e = {elements}, N_t = {steps}: max |y(t, 0.5) - t^2| for t >= 0.25: {error:.3e}")
