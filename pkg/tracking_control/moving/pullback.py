from __future__ import annotations
import logging
import numpy as np
from tracking_control.discretization import Mesh, TimeGrid, CoefficientSet
from tracking_control.solvers import BoundaryControls, solve_forward
from .diffeomorphism import DiffeoMap


logger = logging.getLogger(__name__)


def transform_coefficients(coeffs: CoefficientSet, diffeo: DiffeoMap) -> CoefficientSet:
    """Returns the coefficients of the equation satisfied by
    z(t, x) = y(t, χ(t, x)) when y_t - a y_xx + b y_x + c y = 0:

        ã = a(t, χ) / χ_x²
        b̃ = -χ_t / χ_x + a(t, χ) χ_xx / χ_x³ + b(t, χ) / χ_x
        c̃ = c(t, χ)

    The x-derivatives of ã and b̃ needed by the adjoint assembly fall back to
    finite differences. The ellipticity floor becomes a0 / (max χ_x)².
    """
    def a_tilde(t, x):
        x = np.asarray(x, dtype=float)
        return coeffs.a(t, diffeo.chi(t, x)) / diffeo.chi_x(t, x) ** 2

    def b_tilde(t, x):
        x = np.asarray(x, dtype=float)
        chi = diffeo.chi(t, x)
        chi_x = diffeo.chi_x(t, x)
        return (
            -diffeo.chi_t(t, x) / chi_x
            + coeffs.a(t, chi) * diffeo.chi_xx(t, x) / chi_x ** 3
            + coeffs.b(t, chi) / chi_x
        )

    def c_tilde(t, x):
        return coeffs.c(t, diffeo.chi(t, np.asarray(x, dtype=float)))

    xs = np.linspace(0.0, diffeo.length, 1001)
    times = np.linspace(0.0, diffeo.horizon, 201)
    max_slope = max(float(np.max(diffeo.chi_x(t, xs))) for t in times)
    return CoefficientSet(
        a=a_tilde,
        b=b_tilde,
        c=c_tilde,
        a0=coeffs.a0 / max_slope ** 2,
        time_dependent=True,
        fd_scale=coeffs.fd_scale
    )


def compose(field_values: np.ndarray, mesh: Mesh, timegrid: TimeGrid, diffeo: DiffeoMap) -> np.ndarray:
    """Returns y(t_n, χ(t_n, x_j)) for nodal values y (P1 interpolation)."""
    out = np.empty_like(field_values)
    for n, t in enumerate(timegrid.times):
        out[n] = np.interp(diffeo.chi(t, mesh.nodes), mesh.nodes, field_values[n])
    return out


def pullback_mismatch(
    mesh: Mesh,
    timegrid: TimeGrid,
    coeffs: CoefficientSet,
    controls: BoundaryControls,
    diffeo: DiffeoMap
) -> float:
    """Solves the original problem and the transformed one (same boundary
    data: χ keeps both ends in place) and returns the discrete space-time L²
    distance between z and y(t, χ(t, x)). It vanishes as the grids are
    refined if the transformed coefficients are consistent."""
    if not np.isclose(diffeo.length, mesh.length):
        raise ValueError(f"map length {diffeo.length} differs from mesh length {mesh.length}")
    y = solve_forward(mesh, timegrid, coeffs, controls)
    z = solve_forward(mesh, timegrid, transform_coefficients(coeffs, diffeo), controls)
    composed = compose(y.values, mesh, timegrid, diffeo)
    diff = z.values[1:] - composed[1:]
    mismatch = float(np.sqrt(timegrid.dt * mesh.h * np.sum(diff ** 2)))
    logger.debug(
        "pullback mismatch on N_e = %d, N_t = %d: %.6e",
        mesh.element_count, timegrid.step_count, mismatch
    )
    return mismatch
