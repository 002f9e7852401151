import numpy as np
import pytest
from tracking_control.errors import SmoothingRequiredError
from tracking_control.discretization import discrete_norm
from tracking_control.solvers import BoundaryControls
from tracking_control.duality import (
    adjoint_state,
    step_fluxes,
    recover_controls,
    evaluate_J,
    evaluate_gradient,
    tracking_error,
    duality_residual,
    DualObjective
)
from tracking_control.moving import Trajectory
from tracking_control.optimization import minimize, OptimOptions
from conftest import make_problem


def _dense_heat_J(problem, f):
    """J for a = 1, b = c = 0 and a single observation point on a mesh node,
    from dense matrices written out by hand."""
    h, dt = problem.mesh.h, problem.dt
    n = problem.mesh.interior_count
    nt = problem.timegrid.step_count
    ones = np.ones(n - 1)
    mass = h / 6 * (4 * np.eye(n) + np.diag(ones, 1) + np.diag(ones, -1))
    stiffness = (2 * np.eye(n) - np.diag(ones, 1) - np.diag(ones, -1)) / h
    step = mass / dt + stiffness
    node = problem.mesh.node_index(problem.observations.locations[0]) - 1
    p = np.zeros((nt + 1, n))
    for m in range(nt - 1, -1, -1):
        load = np.zeros(n)
        load[node] = f[m]
        p[m] = np.linalg.solve(step, mass @ p[m + 1] / dt + load)
    flux = -p[:-1, -1] / h
    w = problem.targets[0]
    return (
        0.5 * dt * np.sum(flux ** 2) + dt * np.sum(f * w)
        + problem.epsilon * np.sqrt(dt * np.sum(f ** 2) + problem.delta)
    )


def _finite_differences(problem, f, step=1e-6):
    fd = np.zeros_like(f)
    for j in range(f.size):
        e = np.zeros_like(f)
        e[j] = step
        fd[j] = (evaluate_J(problem, f + e) - evaluate_J(problem, f - e)) / (2 * step)
    return fd


class TestFunctional:

    def test_value_at_zero(self, coarse_problem):
        J = evaluate_J(coarse_problem, coarse_problem.zero_forcing())
        assert J == pytest.approx(coarse_problem.epsilon * np.sqrt(coarse_problem.delta), rel=1e-12)

    def test_matches_dense_computation(self, coarse_problem, rng):
        for _ in range(3):
            f = rng.normal(size=coarse_problem.dimension)
            assert evaluate_J(coarse_problem, f) == pytest.approx(_dense_heat_J(coarse_problem, f), rel=1e-10)

    def test_lower_bound(self, coarse_problem, rng):
        dt = coarse_problem.dt
        w_norm = discrete_norm(coarse_problem.targets, dt)
        for _ in range(100):
            f = rng.normal(size=coarse_problem.dimension) * rng.uniform(0.01, 100.0)
            bound = (
                coarse_problem.epsilon * discrete_norm(f, dt, coarse_problem.delta)
                - discrete_norm(f, dt) * w_norm
            )
            assert evaluate_J(coarse_problem, f) >= bound - 1e-12 * abs(bound)

    @pytest.mark.parametrize('case', ['fixed', 'two-controls'])
    def test_convexity(self, case, heat, rng):
        if case == 'fixed':
            problem = make_problem(heat)
        else:
            problem = make_problem(heat, locations=(0.25, 0.5), sides=('left', 'right'))
        for _ in range(50):
            f = rng.normal(size=problem.dimension) * rng.uniform(0.01, 10.0)
            g = rng.normal(size=problem.dimension) * rng.uniform(0.01, 10.0)
            theta = rng.uniform(0.0, 1.0)
            mixed = evaluate_J(problem, theta * f + (1 - theta) * g)
            chord = theta * evaluate_J(problem, f) + (1 - theta) * evaluate_J(problem, g)
            assert mixed <= chord + 1e-12 * max(1.0, abs(chord))

    def test_controls_are_linear_in_f(self, heat, rng):
        problem = make_problem(heat, locations=(0.25, 0.5), sides=('left', 'right'))
        f = rng.normal(size=problem.dimension)
        plus, minus = recover_controls(problem, f), recover_controls(problem, -f)
        assert np.allclose(minus.left, -plus.left, atol=1e-13)
        assert np.allclose(minus.right, -plus.right, atol=1e-13)

    def test_left_control_is_outward_flux(self, heat, rng):
        problem = make_problem(heat, locations=(0.25, 0.5), sides=('left', 'right'))
        f = rng.normal(size=problem.dimension)
        p = adjoint_state(problem, f)
        controls = recover_controls(problem, f, p)
        fluxes = step_fluxes(problem, p)
        assert np.array_equal(controls.left, -fluxes['left'])
        assert np.array_equal(controls.right, fluxes['right'])
        assert np.allclose(fluxes['left'], p.values[:-1, 1] / problem.mesh.h)

    def test_left_sign_closes_the_duality_pairing(self, heat):
        problem = make_problem(heat, elements=40, steps=40, locations=(0.25, 0.5), sides=('left', 'right'))
        t = problem.timegrid.solve_times
        T = problem.timegrid.horizon
        f = np.stack([np.sin(np.pi * t / T) ** 2, t * (T - t)])
        g = np.stack([t * (T - t), np.sin(np.pi * t / T)])
        flux_f = step_fluxes(problem, adjoint_state(problem, f))
        flux_g = step_fluxes(problem, adjoint_state(problem, g))
        pairing = problem.dt * sum(
            float(np.sum(problem.boundary_weights[s] * flux_f[s] * flux_g[s])) for s in problem.sides
        )
        flipped = BoundaryControls(left=flux_f['left'], right=flux_f['right'])
        observed = problem.dt * float(np.sum(g * tracking_error(problem, flipped).traces))
        assert duality_residual(problem, f, g) < 0.25 * abs(pairing + observed)

    def test_boundary_weights(self, variable_coefficients):
        problem = make_problem(variable_coefficients, locations=(0.75,), sides=('left', 'right'))
        assert np.allclose(problem.boundary_weights['left'], 1.15)
        assert np.allclose(problem.boundary_weights['right'], 0.85)


class TestGradient:

    @pytest.mark.parametrize('case', ['fixed', 'two-controls', 'variable', 'moving'])
    def test_matches_finite_differences(self, case, heat, variable_coefficients, rng):
        if case == 'fixed':
            problem = make_problem(heat)
        elif case == 'two-controls':
            problem = make_problem(heat, locations=(0.25, 0.5), sides=('left', 'right'))
        elif case == 'variable':
            problem = make_problem(variable_coefficients, locations=(0.75,))
        else:
            problem = make_problem(heat, locations=(Trajectory.sine(0.5, 0.15, 0.5),))
        for _ in range(10):
            f = rng.normal(size=problem.dimension)
            grad = evaluate_gradient(problem, f).flat()
            fd = _finite_differences(problem, f)
            np.testing.assert_allclose(fd, grad, rtol=1e-6, atol=1e-6 * np.max(np.abs(grad)))

    def test_zero_at_origin_without_targets(self, heat):
        problem = make_problem(heat, targets=np.zeros((1, 10)))
        grad = evaluate_gradient(problem, problem.zero_forcing())
        assert np.all(grad.signals == 0.0)

    def test_origin_without_smoothing(self, heat):
        problem = make_problem(heat, delta=0.0)
        assert evaluate_J(problem, problem.zero_forcing()) == 0.0
        with pytest.raises(SmoothingRequiredError):
            evaluate_gradient(problem, problem.zero_forcing())

    def test_duality_variant(self, coarse_problem, rng):
        f = rng.normal(size=coarse_problem.dimension)
        grad = evaluate_gradient(coarse_problem, f, method='duality')
        assert grad.signals.shape == (1, 10)
        assert np.all(np.isfinite(grad.signals))
        with pytest.raises(ValueError):
            evaluate_gradient(coarse_problem, f, method='adjoint')


class TestDualObjective:

    def test_one_adjoint_solve_per_point(self, coarse_problem, rng):
        objective = DualObjective(coarse_problem)
        x = rng.normal(size=coarse_problem.dimension)
        objective.value(x)
        objective.gradient(x)
        assert objective.adjoint_solves == 1
        objective.value(x + 1.0)
        assert objective.adjoint_solves == 2

    def test_factorizations_are_reused(self, coarse_problem, rng):
        objective = DualObjective(coarse_problem)
        for _ in range(5):
            x = rng.normal(size=coarse_problem.dimension)
            objective.value(x)
            objective.gradient(x)
        assert coarse_problem.adjoint_cache.factorizations == 1
        assert coarse_problem.transposed_cache.factorizations == 1

    def test_minimizer_decreases_J(self, coarse_problem):
        objective = DualObjective(coarse_problem)
        x0 = np.zeros(coarse_problem.dimension)
        x, report = minimize(objective.value, objective.gradient, x0, OptimOptions())
        assert report.converged
        assert report.objective < objective.value(x0)
        assert np.all(np.diff(report.history) <= 1e-15)


def _discrete_traces(problem, f):
    """Traces seen by the discrete J: minus the derivative of its flux term
    divided by Δt, assembled from the pairing of the adjoint fluxes of `f`
    with those of every unit forcing."""
    fluxes = step_fluxes(problem, adjoint_state(problem, f))
    traces = np.empty(problem.dimension)
    for j in range(problem.dimension):
        unit = np.zeros(problem.dimension)
        unit[j] = 1.0
        unit_fluxes = step_fluxes(problem, adjoint_state(problem, unit))
        traces[j] = -sum(
            float(np.sum(problem.boundary_weights[s] * fluxes[s] * unit_fluxes[s]))
            for s in problem.sides
        )
    return traces.reshape(problem.target_count, problem.timegrid.step_count)


class TestStationarity:

    @pytest.mark.parametrize('case', ['fixed', 'two-controls'])
    def test_optimality_conditions(self, case, heat):
        if case == 'fixed':
            problem = make_problem(heat)
        else:
            problem = make_problem(heat, locations=(0.25, 0.5), sides=('left', 'right'))
        objective = DualObjective(problem)
        options = OptimOptions(method='bfgs', gradient_tolerance=1e-9, objective_tolerance=1e-30)
        x, report = minimize(objective.value, objective.gradient, np.zeros(problem.dimension), options)

        J = evaluate_J(problem, x)
        grad = evaluate_gradient(problem, x).flat()
        assert np.linalg.norm(grad) <= 1e-8 * max(1.0, abs(J))
        assert report.gradient_norm <= 1e-8 * max(1.0, abs(report.objective))

        f = problem.forcing(x).signals
        norm = discrete_norm(f, problem.dt, problem.delta)
        assert norm > 0.0
        residual = _discrete_traces(problem, x) - problem.targets
        np.testing.assert_allclose(residual, problem.epsilon * f / norm, rtol=0.0, atol=1e-6)
        combined = np.sqrt(problem.dt * np.sum(residual ** 2))
        assert combined == pytest.approx(problem.epsilon, rel=1e-5)


class TestTrackingError:

    def test_zero_controls_and_targets(self, heat):
        problem = make_problem(heat, targets=np.zeros((1, 10)))
        errors = tracking_error(problem, BoundaryControls.zeros(problem.timegrid))
        assert errors.combined == 0.0
        assert np.all(errors.per_target == 0.0)

    def test_zero_controls_measure_targets(self, coarse_problem):
        errors = tracking_error(coarse_problem, BoundaryControls.zeros(coarse_problem.timegrid))
        expected = np.sqrt(coarse_problem.dt * np.sum(coarse_problem.targets ** 2))
        assert errors.combined == pytest.approx(expected, rel=1e-12)


class TestProblem:

    def test_target_shape(self, heat):
        with pytest.raises(ValueError):
            make_problem(heat, targets=np.zeros((1, 9)))

    @pytest.mark.parametrize('sides', [(), ('top',), ('right', 'right')])
    def test_sides(self, heat, sides):
        with pytest.raises(ValueError):
            make_problem(heat, sides=sides)

    def test_sides_are_ordered(self, heat):
        assert make_problem(heat, locations=(0.25, 0.5), sides=('right', 'left')).sides == ('left', 'right')

    @pytest.mark.parametrize('epsilon, delta', [(0.0, 1e-14), (-1.0, 1e-14), (0.1, -1.0)])
    def test_tolerances(self, heat, epsilon, delta):
        with pytest.raises(ValueError):
            make_problem(heat, epsilon=epsilon, delta=delta)

    def test_with_epsilon(self, coarse_problem):
        other = coarse_problem.with_epsilon(1e-3)
        assert other.epsilon == 1e-3
        assert other.dimension == coarse_problem.dimension
