"""P1 finite-element assembly on a uniform `Mesh`.

All matrices are first assembled on the full set of N_e + 1 nodes; unless
`full=True` is passed, the restriction to the N_e - 1 interior nodes is
returned (homogeneous Dirichlet rows and columns removed).
"""
from __future__ import annotations
from typing import Literal, Sequence
import numpy as np
from tracking_control.errors import NumericalError
from .mesh import Mesh
from .coefficients import CoefficientSet
from .tridiagonal import TridiagonalMatrix


Side = Literal['left', 'right']

_GAUSS_OFFSET = 0.5 / np.sqrt(3.0)


def _restrict(matrix: TridiagonalMatrix, mesh: Mesh, full: bool) -> TridiagonalMatrix:
    if full:
        return matrix
    return matrix.window(0, mesh.element_count)


def assemble_mass(mesh: Mesh, full: bool = False) -> TridiagonalMatrix:
    """Returns the consistent P1 mass matrix (main diagonal 2h/3 at interior
    nodes, h/3 at the two boundary nodes, off-diagonals h/6)."""
    h = mesh.h
    main = np.full(mesh.node_count, 2 * h / 3)
    main[0] = main[-1] = h / 3
    off = np.full(mesh.element_count, h / 6)
    return _restrict(TridiagonalMatrix(off, main, off), mesh, full)


def gauss_points(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Returns the two Gauss points of every element, as an array of shape
    (N_e, 2), together with the quadrature weight h/2."""
    mid = 0.5 * (mesh.nodes[:-1] + mesh.nodes[1:])
    offset = _GAUSS_OFFSET * mesh.h
    points = np.stack([mid - offset, mid + offset], axis=1)
    return points, 0.5 * mesh.h


def assemble_operator(
    mesh: Mesh,
    coeffs: CoefficientSet,
    t: float,
    adjoint: bool = False,
    full: bool = False
) -> TridiagonalMatrix:
    """Assembles the P1 matrix of the operator L (or of its formal adjoint)
    at time `t`.

    The forward bilinear form is the divergence form

        ∫ a y'φ' + ∫ (a_x + b) y'φ + ∫ c yφ

    and the adjoint form, for L* p = -(a p_x)_x - (a_x + b) p_x
    + (c - a_xx - b_x) p, is

        ∫ a p'φ' - ∫ (a_x + b) p'φ + ∫ (c - a_xx - b_x) pφ.

    Element integrals use 2-point Gauss quadrature.

    Parameters
    ----------
    mesh:
        The spatial mesh.
    coeffs:
        Coefficients of the operator.
    t:
        Time at which the coefficients are evaluated.
    adjoint:
        Assemble the adjoint operator instead of the forward one.
    full:
        Return the matrix on all nodes instead of the interior restriction.

    Returns
    -------
    TridiagonalMatrix
        Entry (i, j) is the bilinear form with trial function φ_j and test
        function φ_i.
    """
    h = mesh.h
    points, weight = gauss_points(mesh)
    x = points.ravel()
    a = coeffs.a(t, x)
    drift = coeffs.da_dx(t, x) + coeffs.b(t, x)
    reaction = coeffs.c(t, x)
    if adjoint:
        drift = -drift
        reaction = reaction - coeffs.d2a_dx2(t, x) - coeffs.db_dx(t, x)
    values = np.stack([a, drift, reaction])
    if not np.all(np.isfinite(values)):
        raise NumericalError(f"non-finite coefficient values at t = {t}")
    a, drift, reaction = (v.reshape(points.shape) for v in values)

    # local hat functions at the Gauss points: phi_left, phi_right
    phi_r = (points - mesh.nodes[:-1, None]) / h
    phi_l = 1.0 - phi_r
    d_l, d_r = -1.0 / h, 1.0 / h

    stiff = weight * a.sum(axis=1)
    # k_xy: test function x, trial function y
    k_ll = stiff * d_l * d_l + weight * np.sum(drift * d_l * phi_l + reaction * phi_l * phi_l, axis=1)
    k_rr = stiff * d_r * d_r + weight * np.sum(drift * d_r * phi_r + reaction * phi_r * phi_r, axis=1)
    k_lr = stiff * d_l * d_r + weight * np.sum(drift * d_r * phi_l + reaction * phi_r * phi_l, axis=1)
    k_rl = stiff * d_r * d_l + weight * np.sum(drift * d_l * phi_r + reaction * phi_l * phi_r, axis=1)

    main = np.zeros(mesh.node_count)
    main[:-1] += k_ll
    main[1:] += k_rr
    return _restrict(TridiagonalMatrix(k_rl, main, k_lr), mesh, full)


def dirac_weights(mesh: Mesh, x_point: float) -> tuple[int, float, float]:
    """Returns the element index k containing `x_point` and the values of the
    two hat functions φ_k, φ_k+1 at `x_point`."""
    L = mesh.length
    if not 0.0 < x_point < L:
        raise ValueError(f"point source must lie strictly inside (0, {L}), got {x_point}")
    k = mesh.locate(x_point)
    w_right = (x_point - mesh.nodes[k]) / mesh.h
    return k, 1.0 - w_right, w_right


def dirac_load(mesh: Mesh, x_point: float, full: bool = False) -> np.ndarray:
    """Returns the load vector (φ_j(x_point))_j of a unit point source at
    `x_point`, over the interior nodes (or all nodes if `full` is True)."""
    k, w_left, w_right = dirac_weights(mesh, x_point)
    load = np.zeros(mesh.node_count)
    load[k] += w_left
    load[k + 1] += w_right
    if full:
        return load
    return load[1:-1].copy()


def _check_nodal(mesh: Mesh, nodal: np.ndarray) -> np.ndarray:
    nodal = np.asarray(nodal, dtype=float)
    if nodal.shape[-1] != mesh.node_count:
        raise ValueError(
            f"nodal vector must hold {mesh.node_count} values (boundary "
            f"included), got {nodal.shape[-1]}"
        )
    return nodal


def trace(mesh: Mesh, nodal: np.ndarray, x_point: float) -> float:
    """Returns the P1 interpolant of `nodal` (all nodes) at `x_point`."""
    nodal = _check_nodal(mesh, nodal)
    tol = 1e-12 * mesh.length
    if not -tol <= x_point <= mesh.length + tol:
        raise ValueError(f"trace point {x_point} lies outside [0, {mesh.length}]")
    return float(np.interp(x_point, mesh.nodes, nodal))


def boundary_flux(mesh: Mesh, nodal: np.ndarray, side: Side) -> float | np.ndarray:
    """Returns the one-sided difference approximation of the x-derivative at
    the boundary `side`. `nodal` may also be a stack of nodal vectors (last
    axis = nodes), in which case one flux per vector is returned."""
    nodal = _check_nodal(mesh, nodal)
    if side == 'right':
        flux = (nodal[..., -1] - nodal[..., -2]) / mesh.h
    elif side == 'left':
        flux = (nodal[..., 1] - nodal[..., 0]) / mesh.h
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return flux if np.ndim(flux) else float(flux)


def discrete_norm(signals: Sequence[np.ndarray] | np.ndarray, dt: float, delta: float = 0.0) -> float:
    """Returns the smoothed discrete norm sqrt(Δt Σ_i Σ_n |f_i^n|² + δ)."""
    if delta < 0:
        raise ValueError(f"smoothing parameter must be nonnegative, got {delta}")
    total = sum(float(np.sum(np.square(s))) for s in signals)
    return float(np.sqrt(dt * total + delta))
