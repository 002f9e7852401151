import numpy as np
import pytest
from tracking_control.discretization import CoefficientSet, build_mesh, build_time_grid
from tracking_control.solvers import ObservationSet
from tracking_control.duality import TrackingProblem
from tracking_control.experiments.config import EXAMPLE3_COEFFICIENTS


@pytest.fixture
def heat():
    return CoefficientSet.constant(1.0)


@pytest.fixture
def variable_coefficients():
    return CoefficientSet.from_expressions(
        EXAMPLE3_COEFFICIENTS['a'], EXAMPLE3_COEFFICIENTS['b'], EXAMPLE3_COEFFICIENTS['c']
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def make_problem(
    coeffs,
    elements=20,
    steps=10,
    horizon=0.5,
    locations=(0.5,),
    sides=('right',),
    epsilon=1e-1,
    delta=1e-14,
    targets=None
):
    mesh = build_mesh(1.0, elements)
    timegrid = build_time_grid(horizon, steps)
    if targets is None:
        t = timegrid.solve_times
        targets = np.stack([
            np.sin(2 * np.pi * 2 * t / horizon) * (i + 1) / len(locations) for i in range(len(locations))
        ])
    return TrackingProblem(
        mesh, timegrid, coeffs, ObservationSet(locations), targets, sides, epsilon, delta
    )


@pytest.fixture
def coarse_problem(heat):
    """Example-1 coefficients on a coarse grid (N_e = 20, N_t = 10)."""
    return make_problem(heat)
