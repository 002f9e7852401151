"""Explicit dual elements with vanishing observed boundary flux.

The adjoint of a well-chosen forcing can be built by gluing source-free
backward solutions on sub-intervals between the observation points:

* one control at x = L, points x_1 < x_2: p̃ on [0, x_1] with boundary values
  (0, 1) and p̂ on [x_1, x_2] with boundary values (1, 0), p = 0 on [x_2, L];
* two controls, points x_1 < x_2 < x_3: p = 0 on [0, x_1] and [x_3, L], p̃ on
  [x_1, x_2] with (0, 1), p̂ on [x_2, x_3] with (1, 0).

The forcing at each point is the jump of a ∂x p across it, e.g.

    f_1 = a(., x_1) (∂x p̃(., x_1-) - ∂x p̂(., x_1+)).

Solving the full adjoint problem with these forcings reproduces the glued
field up to discretization error, so the observed flux tends to zero under
refinement while ||f|| stays put: the tracking problem is not approximately
controllable in these configurations.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Literal
import numpy as np
import pandas as pd
from tracking_control.discretization import (
    Mesh, TimeGrid, CoefficientSet, build_mesh, build_time_grid, discrete_norm
)
from tracking_control.solvers import ObservationSet, solve_adjoint, solve_window_backward
from tracking_control.duality import DualForcing


logger = logging.getLogger(__name__)

Variant = Literal['one-control', 'two-controls']

DEFAULT_POINTS: dict[str, tuple[float, ...]] = {
    'one-control': (0.3, 0.6),
    'two-controls': (0.25, 0.5, 0.75),
}
OBSERVED_SIDES: dict[str, tuple[str, ...]] = {
    'one-control': ('right',),
    'two-controls': ('left', 'right'),
}


@dataclass(frozen=True)
class ObstructionReport:
    """Outcome of one obstruction construction.

    Attributes
    ----------
    mismatch:
        Discrete L² distance sqrt(Δt h Σ |p_glued - p|²) between the glued
        field and the adjoint solved on the whole domain (levels t_0 to
        t_(N_t - 1)).
    fluxes:
        Discrete L² norms sqrt(Δt Σ_k |∂x p^(k-1)(side)|²) of the boundary
        fluxes on the controlled sides.
    forcing_norm:
        ||f|| over all points.
    """
    variant: str
    elements: int
    h: float
    steps: int
    points: tuple[float, ...]
    mismatch: float
    fluxes: dict[str, float]
    forcing_norm: float

    def to_dict(self) -> dict:
        row = {
            'variant': self.variant,
            'elements': self.elements,
            'h': self.h,
            'steps': self.steps,
            'mismatch': self.mismatch,
            'forcing_norm': self.forcing_norm,
        }
        row.update({f'flux_{side}': value for side, value in self.fluxes.items()})
        return row


def _one_sided(values: np.ndarray, j: int, h: float, direction: int) -> np.ndarray:
    # ∂x at node j from the element on the left (direction -1) or right (+1)
    if direction < 0:
        return (values[:, j] - values[:, j - 1]) / h
    return (values[:, j + 1] - values[:, j]) / h


def _glued_field(
    mesh: Mesh,
    timegrid: TimeGrid,
    coeffs: CoefficientSet,
    nodes: tuple[int, ...],
    variant: str
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns the glued nodal values and the two window solutions."""
    if variant == 'one-control':
        windows = ((0, nodes[0]), (nodes[0], nodes[1]))
    else:
        windows = ((nodes[0], nodes[1]), (nodes[1], nodes[2]))
    (lo1, hi1), (lo2, hi2) = windows
    p_tilde = solve_window_backward(mesh, timegrid, coeffs, lo1, hi1, 0.0, 1.0).values
    p_hat = solve_window_backward(mesh, timegrid, coeffs, lo2, hi2, 1.0, 0.0).values
    glued = p_tilde.copy()
    glued[:, lo2:hi2 + 1] = p_hat[:, lo2:hi2 + 1]
    return glued, p_tilde, p_hat


def _jump_forcing(
    mesh: Mesh,
    timegrid: TimeGrid,
    coeffs: CoefficientSet,
    nodes: tuple[int, ...],
    p_tilde: np.ndarray,
    p_hat: np.ndarray,
    variant: str
) -> np.ndarray:
    # forcing k (solve time t_k) is read from the adjoint level t_(k-1)
    h = mesh.h
    times = timegrid.times[:-1]
    levels_tilde = p_tilde[:-1]
    levels_hat = p_hat[:-1]

    def weight(j: int) -> np.ndarray:
        x = np.array([mesh.nodes[j]])
        return np.array([float(coeffs.a(t, x)[0]) for t in times])

    if variant == 'one-control':
        k1, k2 = nodes
        f1 = weight(k1) * (_one_sided(levels_tilde, k1, h, -1) - _one_sided(levels_hat, k1, h, +1))
        f2 = weight(k2) * _one_sided(levels_hat, k2, h, -1)
        return np.stack([f1, f2])
    k1, k2, k3 = nodes
    f1 = -weight(k1) * _one_sided(levels_tilde, k1, h, +1)
    f2 = weight(k2) * (_one_sided(levels_tilde, k2, h, -1) - _one_sided(levels_hat, k2, h, +1))
    f3 = weight(k3) * _one_sided(levels_hat, k3, h, -1)
    return np.stack([f1, f2, f3])


def run_obstruction(
    variant: Variant = 'one-control',
    elements: int = 20,
    steps: int = 100,
    length: float = 1.0,
    horizon: float = 1.0,
    coeffs: CoefficientSet | None = None,
    points: tuple[float, ...] | None = None
) -> ObstructionReport:
    """Builds the obstruction for `variant` on a mesh of `elements` elements
    and `steps` time steps and measures how well it vanishes at the
    controlled boundaries.

    Parameters
    ----------
    variant: {'one-control', 'two-controls'}
        Two points observed with a control at x = L, or three points observed
        with controls at both ends.
    elements, steps:
        Discretization. The points must be mesh nodes.
    length, horizon:
        Domain [0, L] x [0, T].
    coeffs:
        Operator coefficients (default: the heat operator a = 1).
    points:
        Strictly increasing observation points (default: 0.3, 0.6 for
        'one-control', 0.25, 0.5, 0.75 for 'two-controls', scaled by L).
    """
    if variant not in DEFAULT_POINTS:
        raise ValueError(f"unknown obstruction variant {variant!r}; choose from {sorted(DEFAULT_POINTS)}")
    if points is None:
        points = tuple(length * x for x in DEFAULT_POINTS[variant])
    points = tuple(float(x) for x in points)
    if len(points) != len(DEFAULT_POINTS[variant]):
        raise ValueError(f"variant {variant!r} needs {len(DEFAULT_POINTS[variant])} points, got {len(points)}")
    coeffs = coeffs or CoefficientSet.constant(1.0)
    mesh = build_mesh(length, elements)
    timegrid = build_time_grid(horizon, steps)
    nodes = tuple(mesh.node_index(x) for x in points)
    if any(j <= 0 or j >= elements for j in nodes) or any(np.diff(nodes) <= 0):
        raise ValueError(f"obstruction points must be strictly increasing and interior, got {points}")
    observations = ObservationSet(points).validate(mesh, timegrid)

    glued, p_tilde, p_hat = _glued_field(mesh, timegrid, coeffs, nodes, variant)
    signals = _jump_forcing(mesh, timegrid, coeffs, nodes, p_tilde, p_hat, variant)
    adjoint = solve_adjoint(mesh, timegrid, coeffs, DualForcing(signals, observations))

    dt, h = timegrid.dt, mesh.h
    diff = glued[:-1] - adjoint.values[:-1]
    mismatch = float(np.sqrt(dt * h * np.sum(diff ** 2)))
    fluxes = {
        side: float(np.sqrt(dt * np.sum(adjoint.flux(side)[:-1] ** 2)))
        for side in OBSERVED_SIDES[variant]
    }
    report = ObstructionReport(
        variant, elements, mesh.h, steps, points, mismatch, fluxes, discrete_norm(signals, dt)
    )
    logger.info(
        "obstruction %s, N_e = %d: mismatch %.3e, fluxes %s, |f| = %.4e",
        variant, elements, mismatch,
        ', '.join(f'{s} {v:.3e}' for s, v in fluxes.items()), report.forcing_norm
    )
    return report


def obstruction_refinement(
    variant: Variant = 'one-control',
    levels: int = 3,
    elements: int = 20,
    steps: int = 100,
    **kwargs
) -> pd.DataFrame:
    """Runs `run_obstruction` on `levels` meshes, halving h_e each time with
    the time grid held fixed, and tabulates the results together with the
    reduction factors of the boundary fluxes."""
    if levels < 1:
        raise ValueError(f"at least one refinement level is needed, got {levels}")
    rows = [
        run_obstruction(variant, elements * 2 ** level, steps, **kwargs).to_dict()
        for level in range(levels)
    ]
    frame = pd.DataFrame(rows)
    for side in OBSERVED_SIDES[variant]:
        column = f'flux_{side}'
        frame[f'{column}_reduction'] = frame[column].shift(1) / frame[column]
    return frame
