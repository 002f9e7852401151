from __future__ import annotations
from dataclasses import dataclass, field
from functools import cached_property
import numpy as np
from tracking_control.discretization import Mesh, TimeGrid, CoefficientSet, discrete_norm
from tracking_control.solvers import ObservationSet, FactorCache


CONTROL_SIDES = ('left', 'right')


@dataclass(frozen=True, eq=False)
class DualForcing:
    """The dual unknowns f_1, ..., f_N on the solve times, bound to their
    observation locations. `signals` has shape (N, N_t)."""
    signals: np.ndarray
    observations: ObservationSet

    def __post_init__(self):
        signals = np.atleast_2d(np.asarray(self.signals, dtype=float))
        if signals.shape[0] != self.observations.count:
            raise ValueError(
                f"{self.observations.count} forcing signals expected, got {signals.shape[0]}"
            )
        object.__setattr__(self, 'signals', signals)

    @property
    def step_count(self) -> int:
        return self.signals.shape[1]

    def flat(self) -> np.ndarray:
        return self.signals.ravel().copy()

    def norm(self, dt: float, delta: float = 0.0) -> float:
        return discrete_norm(self.signals, dt, delta)

    def __add__(self, other: DualForcing) -> DualForcing:
        return DualForcing(self.signals + other.signals, self.observations)

    def __sub__(self, other: DualForcing) -> DualForcing:
        return DualForcing(self.signals - other.signals, self.observations)

    def __mul__(self, factor: float) -> DualForcing:
        return DualForcing(factor * self.signals, self.observations)

    __rmul__ = __mul__

    def __neg__(self) -> DualForcing:
        return DualForcing(-self.signals, self.observations)


@dataclass(frozen=True, eq=False)
class TrackingProblem:
    """A pointwise tracking problem: find boundary controls on `sides` such
    that the traces of the state at the observation locations stay within
    `epsilon` of the `targets`.

    Parameters
    ----------
    mesh, timegrid:
        The discretization.
    coeffs:
        Coefficients of the parabolic operator.
    observations:
        The N observation locations (fixed or moving).
    targets:
        The target signals w_1, ..., w_N on the solve times, shape (N, N_t).
    sides:
        Controlled boundaries: ('right',) for a single control at x = L,
        ('left', 'right') for two controls. A single left control is also
        accepted.
    epsilon:
        Tracking tolerance ε > 0 (weight of the norm term of the dual
        functional).
    delta:
        Smoothing δ ≥ 0 of the norm term.
    """
    mesh: Mesh
    timegrid: TimeGrid
    coeffs: CoefficientSet
    observations: ObservationSet
    targets: np.ndarray
    sides: tuple[str, ...] = ('right',)
    epsilon: float = 1e-3
    delta: float = 1e-14
    validate_coefficients: bool = field(default=True, repr=False)

    def __post_init__(self):
        targets = np.atleast_2d(np.asarray(self.targets, dtype=float))
        expected = (self.observations.count, self.timegrid.step_count)
        if targets.shape != expected:
            raise ValueError(f"targets must have shape {expected}, got {targets.shape}")
        object.__setattr__(self, 'targets', targets)
        sides = tuple(self.sides)
        if not sides or any(s not in CONTROL_SIDES for s in sides) or len(set(sides)) != len(sides):
            raise ValueError(f"sides must be a non-empty subset of {CONTROL_SIDES}, got {sides}")
        object.__setattr__(self, 'sides', tuple(s for s in CONTROL_SIDES if s in sides))
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.delta >= 0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")
        self.observations.validate(self.mesh, self.timegrid)
        if self.validate_coefficients:
            self.coeffs.validate(self.mesh, self.timegrid)

    @property
    def dt(self) -> float:
        return self.timegrid.dt

    @property
    def target_count(self) -> int:
        return self.observations.count

    @property
    def dimension(self) -> int:
        """Number of scalar unknowns N * N_t."""
        return self.target_count * self.timegrid.step_count

    @cached_property
    def forward_cache(self) -> FactorCache:
        return FactorCache(self.mesh, self.timegrid, self.coeffs, adjoint=False)

    @cached_property
    def adjoint_cache(self) -> FactorCache:
        return FactorCache(self.mesh, self.timegrid, self.coeffs, adjoint=True)

    @cached_property
    def transposed_cache(self) -> FactorCache:
        return FactorCache(self.mesh, self.timegrid, self.coeffs, adjoint=True, transposed=True)

    @cached_property
    def boundary_weights(self) -> dict[str, np.ndarray]:
        """a(t_k, side) on the solve times for each controlled side."""
        times = self.timegrid.solve_times
        position = {'left': 0.0, 'right': self.mesh.length}
        return {
            side: np.array([float(self.coeffs.a(t, np.array([position[side]]))[0]) for t in times])
            for side in self.sides
        }

    def forcing(self, signals: np.ndarray) -> DualForcing:
        """Wraps `signals` (shape (N, N_t) or the flat vector) as a
        `DualForcing` of this problem."""
        signals = np.asarray(signals, dtype=float).reshape(self.target_count, self.timegrid.step_count)
        return DualForcing(signals, self.observations)

    def zero_forcing(self) -> DualForcing:
        return self.forcing(np.zeros(self.dimension))

    def with_epsilon(self, epsilon: float) -> TrackingProblem:
        return TrackingProblem(
            self.mesh, self.timegrid, self.coeffs, self.observations,
            self.targets, self.sides, epsilon, self.delta, validate_coefficients=False
        )
