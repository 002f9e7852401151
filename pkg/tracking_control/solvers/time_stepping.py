"""Backward-Euler time stepping.

Every solver in this module marches

    (M/Δt + A_level) u^n = (M/Δt) u^(n-1) + G^n + S^n,    n = 1, ..., N_t

on a window of nodes [x_lo, x_hi] with Dirichlet values at the two window
ends. G^n carries the couplings with the known boundary values, taken from the
matrices assembled on all nodes, and S^n is an optional source. The forward
state marches in physical time; the adjoint marches in the reversed time
s = T - t and is flipped back afterwards.
"""
from __future__ import annotations
import logging
from typing import Callable, Iterable, TYPE_CHECKING
import numpy as np
from tracking_control.errors import NumericalError
from tracking_control.discretization import (
    Mesh,
    TimeGrid,
    CoefficientSet,
    TridiagonalMatrix,
    ThomasFactorization,
    assemble_mass,
    assemble_operator
)
from .fields import SpaceTimeField, BoundaryControls, point_source_table

if TYPE_CHECKING:
    from tracking_control.duality import DualForcing


logger = logging.getLogger(__name__)


class FactorCache:
    """Step matrices M/Δt + A(t_level) and their Thomas factorizations.

    With time-independent coefficients a single factorization serves every
    level; otherwise each level is assembled and factored on first use and
    kept, so that repeated solves (e.g. during an optimization) factor each
    level only once.
    """
    def __init__(
        self,
        mesh: Mesh,
        timegrid: TimeGrid,
        coeffs: CoefficientSet,
        adjoint: bool = False,
        transposed: bool = False,
        window: tuple[int, int] | None = None
    ) -> None:
        """Creates a `FactorCache`.

        Parameters
        ----------
        mesh, timegrid, coeffs:
            The discretization and the coefficients of the operator.
        adjoint:
            Use the adjoint operator L* instead of L.
        transposed:
            Factor the transposes of the step matrices.
        window:
            Node indices (lo, hi) of the Dirichlet window; the default is the
            whole mesh (0, N_e).
        """
        self.mesh = mesh
        self.timegrid = timegrid
        self.coeffs = coeffs
        self.adjoint = adjoint
        self.transposed = transposed
        self.window = window or (0, mesh.element_count)
        lo, hi = self.window
        if not 0 <= lo < hi - 1 or hi > mesh.element_count:
            raise ValueError(f"invalid node window {self.window} on a mesh with {mesh.element_count} elements")
        self.mass = assemble_mass(mesh, full=True) / timegrid.dt
        self.factorizations = 0
        self._steps: dict[int, tuple[TridiagonalMatrix, ThomasFactorization]] = {}

    def _key(self, level: int) -> int:
        return level if self.coeffs.time_dependent else 0

    def _entry(self, level: int) -> tuple[TridiagonalMatrix, ThomasFactorization]:
        key = self._key(level)
        try:
            return self._steps[key]
        except KeyError:
            pass
        t = float(self.timegrid.times[level])
        step = self.mass + assemble_operator(self.mesh, self.coeffs, t, self.adjoint, full=True)
        block = step.window(*self.window)
        if self.transposed:
            step, block = step.transpose(), block.transpose()
        factors = block.factor()
        self.factorizations += 1
        logger.debug(
            "factorized %s step matrix at level %d (%d so far)",
            'adjoint' if self.adjoint else 'forward', level, self.factorizations
        )
        self._steps[key] = (step, factors)
        return step, factors

    def step_matrix(self, level: int) -> TridiagonalMatrix:
        """Returns M/Δt + A(t_level) on all nodes."""
        return self._entry(level)[0]

    def factorization(self, level: int) -> ThomasFactorization:
        """Returns the factorization of the window block of the step matrix."""
        return self._entry(level)[1]

    def matches(self, mesh: Mesh, timegrid: TimeGrid, coeffs: CoefficientSet, adjoint: bool) -> bool:
        return (
            self.mesh == mesh and self.timegrid == timegrid
            and self.coeffs is coeffs and self.adjoint == adjoint
        )


def factor_cache(
    mesh: Mesh,
    timegrid: TimeGrid,
    coeffs: CoefficientSet,
    adjoint: bool = False
) -> FactorCache:
    """Returns a `FactorCache` over the interior nodes of `mesh`."""
    return FactorCache(mesh, timegrid, coeffs, adjoint)


def _check_cache(
    cache: FactorCache | None,
    mesh: Mesh,
    timegrid: TimeGrid,
    coeffs: CoefficientSet,
    adjoint: bool,
    window: tuple[int, int] | None = None
) -> FactorCache:
    if cache is None:
        return FactorCache(mesh, timegrid, coeffs, adjoint, window=window)
    if not cache.matches(mesh, timegrid, coeffs, adjoint) or cache.transposed:
        raise ValueError("the factor cache was built for another problem")
    if window is not None and cache.window != window:
        raise ValueError(f"the factor cache covers window {cache.window}, not {window}")
    return cache


def _march(
    cache: FactorCache,
    levels: Iterable[int],
    left: np.ndarray | None = None,
    right: np.ndarray | None = None,
    source: Callable[[int], np.ndarray | None] | None = None
) -> np.ndarray:
    """Marches N_t implicit Euler steps on the window of `cache`.

    Parameters
    ----------
    cache:
        Factorizations of the step matrices.
    levels:
        Matrix level used at steps n = 1, ..., N_t.
    left, right:
        Dirichlet values at the window ends for steps n = 0, ..., N_t (None
        means homogeneous).
    source:
        Callable returning the source S^n at step n over the window interior
        (or None).

    Returns
    -------
    np.ndarray
        Shape (N_t + 1, hi - lo + 1): the window values, ends included, with
        row 0 the zero initial state.
    """
    lo, hi = cache.window
    nt = cache.timegrid.step_count
    mass = cache.mass
    mass_window = mass.window(lo, hi)
    m_left = mass.entry(lo + 1, lo)
    m_right = mass.entry(hi - 1, hi)
    out = np.zeros((nt + 1, hi - lo + 1))
    if left is not None:
        out[:, 0] = left
    if right is not None:
        out[:, -1] = right
    prev = out[0, 1:-1]
    for n, level in enumerate(levels, start=1):
        step = cache.step_matrix(level)
        rhs = mass_window.matvec(prev)
        if left is not None:
            rhs[0] += -step.entry(lo + 1, lo) * left[n] + m_left * left[n - 1]
        if right is not None:
            rhs[-1] += -step.entry(hi - 1, hi) * right[n] + m_right * right[n - 1]
        if source is not None:
            extra = source(n)
            if extra is not None:
                rhs += extra
        prev = cache.factorization(level).solve(rhs)
        out[n, 1:-1] = prev
    if not np.all(np.isfinite(out)):
        raise NumericalError("time stepping produced non-finite values")
    return out


def _with_initial(signal: np.ndarray | None) -> np.ndarray | None:
    if signal is None:
        return None
    return np.concatenate([[0.0], signal])


def solve_forward(
    mesh: Mesh,
    timegrid: TimeGrid,
    coeffs: CoefficientSet,
    controls: BoundaryControls,
    cache: FactorCache | None = None,
    source: Callable[[float, np.ndarray], np.ndarray] | None = None
) -> SpaceTimeField:
    """Solves y_t + L y = f on (0, T) x (0, L) with y(0, .) = 0 and the
    Dirichlet boundary `controls` (an uncontrolled side is held at zero).

    The right-hand side f is zero unless `source`, a vectorized f(t, x), is
    given; it is interpolated on the nodes at each solve time and loaded with
    the mass matrix.

    Returns the state on all nodes at t_0, ..., t_Nt; its boundary nodes
    carry the control values.
    """
    controls.check(timegrid)
    cache = _check_cache(cache, mesh, timegrid, coeffs, adjoint=False)
    load = None
    if source is not None:
        nodes, times, dt = mesh.nodes, timegrid.times, timegrid.dt

        def load(n: int) -> np.ndarray:
            f = np.broadcast_to(np.asarray(source(times[n], nodes), dtype=float), nodes.shape)
            return dt * cache.mass.matvec(f)[1:-1]
    values = _march(
        cache,
        range(1, timegrid.step_count + 1),
        left=_with_initial(controls.left),
        right=_with_initial(controls.right),
        source=load
    )
    return SpaceTimeField(values, mesh, timegrid, 'state')


def solve_adjoint(
    mesh: Mesh,
    timegrid: TimeGrid,
    coeffs: CoefficientSet,
    forcing: DualForcing,
    cache: FactorCache | None = None
) -> SpaceTimeField:
    """Solves the backward adjoint problem

        -p_t + L* p = Σ_i f_i(t) δ(x - x_i(t)),   p(T, .) = 0,   p = 0 on the boundary

    in the reversed time s = T - t. Reversed step n computes the adjoint at
    the physical level t_(N_t - n) and is driven by the forcing values at the
    solve time t_σ with σ = N_t - n + 1, with the point sources placed at
    x_i(t_σ).

    Returns the adjoint indexed by physical time; the slice at t = T is zero.
    """
    signals = np.asarray(forcing.signals, dtype=float)
    nt = timegrid.step_count
    if signals.shape != (forcing.observations.count, nt):
        raise ValueError(
            f"forcing must hold {forcing.observations.count} signals of {nt} "
            f"values, got shape {signals.shape}"
        )
    cache = _check_cache(cache, mesh, timegrid, coeffs, adjoint=True)
    table = point_source_table(forcing.observations, mesh, timegrid)
    interior = mesh.interior_count

    def source(n: int) -> np.ndarray:
        sigma = nt - n + 1
        load = np.zeros(interior + 2)
        for i in range(signals.shape[0]):
            f = signals[i, sigma - 1]
            k = table.elements[sigma, i]
            load[k] += f * table.left_weights[sigma, i]
            load[k + 1] += f * table.right_weights[sigma, i]
        return load[1:-1]

    q = _march(cache, range(nt - 1, -1, -1), source=source)
    reversed_field = SpaceTimeField(q, mesh, timegrid, 'adjoint', reversed_time=True)
    return reversed_field.reversed()


def solve_window_backward(
    mesh: Mesh,
    timegrid: TimeGrid,
    coeffs: CoefficientSet,
    lo: int,
    hi: int,
    left_value: float,
    right_value: float,
    cache: FactorCache | None = None
) -> SpaceTimeField:
    """Solves the source-free backward adjoint problem -p_t + L* p = 0 on the
    node window [x_lo, x_hi] with p(T, .) = 0 and the constant Dirichlet
    values `left_value` at x_lo and `right_value` at x_hi for t < T.

    The returned field covers the whole mesh and is zero outside the window.
    """
    nt = timegrid.step_count
    cache = _check_cache(cache, mesh, timegrid, coeffs, adjoint=True, window=(lo, hi))
    # march order starts at t = T, where the boundary values vanish
    left = np.full(nt + 1, float(left_value))
    right = np.full(nt + 1, float(right_value))
    left[0] = right[0] = 0.0
    q = _march(cache, range(nt - 1, -1, -1), left=left, right=right)
    values = np.zeros((nt + 1, mesh.node_count))
    values[:, lo:hi + 1] = q[::-1]
    return SpaceTimeField(values, mesh, timegrid, 'adjoint')


def solve_adjoint_transposed(
    cache: FactorCache,
    sources: np.ndarray
) -> np.ndarray:
    """Solves, forward in time, the transposed adjoint recurrence

        B_m^T μ_m = r_m + (M/Δt) μ_(m-1),   m = 0, ..., N_t - 1,   μ_(-1) = 0

    where B_m = M/Δt + A*(t_m). This is the sweep that differentiates a
    function of the discrete adjoint with respect to its sources.

    Parameters
    ----------
    cache:
        A transposed adjoint `FactorCache` on the interior nodes.
    sources:
        The vectors r_m over the interior nodes, shape (N_t, N_e - 1).

    Returns
    -------
    np.ndarray
        μ_0, ..., μ_(N_t - 1) over the interior nodes, shape (N_t, N_e - 1).
    """
    if not (cache.adjoint and cache.transposed):
        raise ValueError("a transposed adjoint factor cache is required")
    nt = cache.timegrid.step_count
    if sources.shape != (nt, cache.mesh.interior_count):
        raise ValueError(f"sources must have shape {(nt, cache.mesh.interior_count)}, got {sources.shape}")
    mu = _march(cache, range(nt), source=lambda n: sources[n - 1])
    return mu[1:, 1:-1]
