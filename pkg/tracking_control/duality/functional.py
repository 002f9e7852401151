"""The dual functional of the tracking problem and everything derived from it.

Conventions on the time grid (left rectangle rule over the adjoint levels):
the control at the solve time t_k is read from the adjoint at level t_(k-1),

    v_L^k = ∂x p^(k-1)(L),        v_0^k = -∂x p^(k-1)(0)

(the left control is the outward normal derivative), and

    J(f) = Δt/2 Σ_k Σ_sides a(t_k, side) |∂x p^(k-1)(side)|²
           + Δt Σ_k Σ_i f_i^k w_i^k
           + ε sqrt(Δt Σ_k Σ_i |f_i^k|² + δ).
"""
from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Literal
import numpy as np
from tracking_control.errors import SmoothingRequiredError
from tracking_control.discretization import discrete_norm
from tracking_control.solvers import (
    SpaceTimeField,
    BoundaryControls,
    solve_forward,
    solve_adjoint,
    solve_adjoint_transposed,
    point_source_table
)
from .problem import TrackingProblem, DualForcing


logger = logging.getLogger(__name__)

GradientMethod = Literal['transpose', 'duality']


def _as_forcing(problem: TrackingProblem, f: DualForcing | np.ndarray) -> DualForcing:
    if isinstance(f, DualForcing):
        if f.signals.shape != (problem.target_count, problem.timegrid.step_count):
            raise ValueError(
                f"forcing has shape {f.signals.shape}, the problem needs "
                f"{(problem.target_count, problem.timegrid.step_count)}"
            )
        return f
    return problem.forcing(f)


def adjoint_state(problem: TrackingProblem, f: DualForcing | np.ndarray) -> SpaceTimeField:
    """Solves the adjoint system driven by `f` (factorizations are reused
    from the problem)."""
    f = _as_forcing(problem, f)
    return solve_adjoint(problem.mesh, problem.timegrid, problem.coeffs, f, problem.adjoint_cache)


def step_fluxes(problem: TrackingProblem, adjoint: SpaceTimeField) -> dict[str, np.ndarray]:
    """Boundary fluxes of the adjoint at the levels t_0, ..., t_(N_t - 1),
    i.e. the flux serving the solve time t_k sits at index k - 1."""
    return {side: adjoint.flux(side)[:-1] for side in problem.sides}


def _controls_from_fluxes(fluxes: dict[str, np.ndarray]) -> BoundaryControls:
    # outward normal derivative: +∂x p at x = L, -∂x p at x = 0
    left = fluxes.get('left')
    return BoundaryControls(
        left=None if left is None else -left,
        right=fluxes.get('right')
    )


def recover_controls(
    problem: TrackingProblem,
    f: DualForcing | np.ndarray,
    adjoint: SpaceTimeField | None = None
) -> BoundaryControls:
    """Returns the boundary controls defined by the adjoint of `f`: the raw
    boundary flux at x = L and minus the boundary flux at x = 0.

    The signs come from integrating the state and adjoint equations against
    each other by parts over (0, T) x (0, L). With y(0) = 0, p(T) = 0 and
    p = 0 at both ends only the diffusion boundary term survives:

        Σ_i ∫ f_i(t) y(t, x_i) dt = -∫ a v_L ∂x p(t, L) dt + ∫ a v_0 ∂x p(t, 0) dt
                                 = -∫ a v · (∂x p · n) dt.

    The controls v = ∂x p · n, i.e. v_L = ∂x p(., L) and v_0 = -∂x p(., 0),
    turn this into minus the flux term of J. Flipping the left sign breaks that pairing
    (`duality_residual` measures it).
    """
    if adjoint is None:
        adjoint = adjoint_state(problem, f)
    return _controls_from_fluxes(step_fluxes(problem, adjoint))


def evaluate_J(
    problem: TrackingProblem,
    f: DualForcing | np.ndarray,
    adjoint: SpaceTimeField | None = None
) -> float:
    """Evaluates the dual functional J(f)."""
    f = _as_forcing(problem, f)
    if adjoint is None:
        adjoint = adjoint_state(problem, f)
    dt = problem.dt
    fluxes = step_fluxes(problem, adjoint)
    j1 = 0.5 * dt * sum(
        float(np.sum(problem.boundary_weights[side] * fluxes[side] ** 2))
        for side in problem.sides
    )
    j2 = dt * float(np.sum(f.signals * problem.targets))
    j3 = problem.epsilon * discrete_norm(f.signals, dt, problem.delta)
    return j1 + j2 + j3


def _norm_gradient(problem: TrackingProblem, f: DualForcing) -> np.ndarray:
    norm = discrete_norm(f.signals, problem.dt, problem.delta)
    if norm == 0.0:
        raise SmoothingRequiredError(
            "smoothing required: the norm term is not differentiable at f = 0 when delta = 0"
        )
    return problem.epsilon * problem.dt * f.signals / norm


def evaluate_gradient(
    problem: TrackingProblem,
    f: DualForcing | np.ndarray,
    method: GradientMethod = 'transpose',
    adjoint: SpaceTimeField | None = None
) -> DualForcing:
    """Returns the gradient of J at `f`.

    Parameters
    ----------
    problem:
        The tracking problem.
    f:
        The dual forcing.
    method: {'transpose', 'duality'}
        'transpose' differentiates the discrete J exactly: a forward sweep
        with the transposed adjoint step matrices, driven by the weighted
        boundary fluxes, gives the derivative of the flux term.
        'duality' uses the continuous identity instead, replacing that
        derivative by -Δt times the traces of the state steered by the
        recovered controls; it is exact only up to discretization error.
    adjoint:
        The adjoint of `f`, if already available.
    """
    f = _as_forcing(problem, f)
    norm_term = _norm_gradient(problem, f)
    if adjoint is None:
        adjoint = adjoint_state(problem, f)
    dt = problem.dt
    if method == 'duality':
        controls = recover_controls(problem, f, adjoint)
        state = solve_forward(problem.mesh, problem.timegrid, problem.coeffs, controls, problem.forward_cache)
        traces = observed_traces(problem, state)
        grad = dt * (problem.targets - traces) + norm_term
        return DualForcing(grad, problem.observations)
    if method != 'transpose':
        raise ValueError(f"unknown gradient method {method!r}")

    mesh = problem.mesh
    nt = problem.timegrid.step_count
    fluxes = step_fluxes(problem, adjoint)
    sources = np.zeros((nt, mesh.interior_count))
    # d(flux_R)/dp = -1/h on the last interior node, d(flux_L)/dp = 1/h on the first
    if 'right' in fluxes:
        sources[:, -1] -= dt * problem.boundary_weights['right'] * fluxes['right'] / mesh.h
    if 'left' in fluxes:
        sources[:, 0] += dt * problem.boundary_weights['left'] * fluxes['left'] / mesh.h
    mu = solve_adjoint_transposed(problem.transposed_cache, sources)
    mu = np.pad(mu, ((0, 0), (1, 1)))

    table = point_source_table(problem.observations, mesh, problem.timegrid)
    rows = np.arange(nt)
    grad = np.empty((problem.target_count, nt))
    for i in range(problem.target_count):
        k = table.elements[1:, i]
        grad[i] = (
            table.left_weights[1:, i] * mu[rows, k]
            + table.right_weights[1:, i] * mu[rows, k + 1]
        )
    grad += dt * problem.targets + norm_term
    return DualForcing(grad, problem.observations)


def observed_traces(problem: TrackingProblem, state: SpaceTimeField) -> np.ndarray:
    """Traces of `state` at the observation locations on the solve times,
    shape (N, N_t)."""
    return np.stack([state.traces(loc) for loc in problem.observations.locations])


@dataclass(frozen=True, eq=False)
class TrackingErrors:
    """Per-target errors E_i = ||y(., x_i) - w_i||, their combined norm, and
    the state and traces they were computed from."""
    per_target: np.ndarray
    combined: float
    traces: np.ndarray
    state: SpaceTimeField


def tracking_error(problem: TrackingProblem, controls: BoundaryControls) -> TrackingErrors:
    """Steers the state with `controls` and measures the discrete L² distance
    between its traces and the targets."""
    state = solve_forward(problem.mesh, problem.timegrid, problem.coeffs, controls, problem.forward_cache)
    traces = observed_traces(problem, state)
    residual = traces - problem.targets
    per_target = np.sqrt(problem.dt * np.sum(residual ** 2, axis=1))
    combined = float(np.sqrt(np.sum(per_target ** 2)))
    return TrackingErrors(per_target, combined, traces, state)


def duality_residual(
    problem: TrackingProblem,
    f: DualForcing | np.ndarray,
    g: DualForcing | np.ndarray
) -> float:
    """Returns the residual of the discrete duality pairing

        | Δt Σ_k Σ_sides a ∂x p_f ∂x p_g + Δt Σ_k Σ_i g_i^k y_f(t_k, x_i) |

    where y_f is steered by the controls recovered from f. The two sums
    cancel in the continuous setting; here they cancel up to the
    discretization error of the adjoint and of the boundary elimination.
    """
    f = _as_forcing(problem, f)
    g = _as_forcing(problem, g)
    p_f = adjoint_state(problem, f)
    p_g = adjoint_state(problem, g)
    flux_f = step_fluxes(problem, p_f)
    flux_g = step_fluxes(problem, p_g)
    pairing = problem.dt * sum(
        float(np.sum(problem.boundary_weights[s] * flux_f[s] * flux_g[s]))
        for s in problem.sides
    )
    errors = tracking_error(problem, _controls_from_fluxes(flux_f))
    observed = problem.dt * float(np.sum(g.signals * errors.traces))
    return abs(pairing + observed)


class DualObjective:
    """Value and gradient of J as functions of the flat vector of unknowns,
    for use with `minimize`. The adjoint of the last evaluated point is kept,
    so a value and a gradient at the same point need one adjoint solve."""

    def __init__(self, problem: TrackingProblem, method: GradientMethod = 'transpose') -> None:
        self.problem = problem
        self.method = method
        self.adjoint_solves = 0
        self._key: bytes | None = None
        self._adjoint: SpaceTimeField | None = None

    def _adjoint_at(self, x: np.ndarray) -> SpaceTimeField:
        key = np.asarray(x, dtype=float).tobytes()
        if key != self._key:
            self._adjoint = adjoint_state(self.problem, x)
            self._key = key
            self.adjoint_solves += 1
        return self._adjoint

    def value(self, x: np.ndarray) -> float:
        return evaluate_J(self.problem, x, self._adjoint_at(x))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        grad = evaluate_gradient(self.problem, x, self.method, self._adjoint_at(x))
        return grad.flat()
