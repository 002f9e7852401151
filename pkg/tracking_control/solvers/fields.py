from __future__ import annotations
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Literal
import numpy as np
import pandas as pd
from tracking_control.discretization import Mesh, TimeGrid, GridSignal, dirac_weights, boundary_flux


Role = Literal['state', 'adjoint']
Location = float | Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Nodal values of a state y or an adjoint p at all time levels.

    Row n of `values` holds the values at all N_e + 1 nodes (boundary nodes
    included) at time level n. If `reversed_time` is True, row n belongs to
    the reversed time s_n = T - t_n instead.
    """
    values: np.ndarray
    mesh: Mesh
    timegrid: TimeGrid
    role: Role = 'state'
    reversed_time: bool = False

    def __post_init__(self):
        expected = (self.timegrid.step_count + 1, self.mesh.node_count)
        if self.values.shape != expected:
            raise ValueError(f"field values must have shape {expected}, got {self.values.shape}")

    def reversed(self) -> SpaceTimeField:
        """Returns the field with its time axis reversed."""
        return SpaceTimeField(
            self.values[::-1].copy(), self.mesh, self.timegrid,
            self.role, not self.reversed_time
        )

    def flux(self, side: str) -> np.ndarray:
        """Returns the one-sided boundary flux at every time level."""
        return boundary_flux(self.mesh, self.values, side)

    def traces(self, location: Location) -> np.ndarray:
        """Returns the P1 trace at `location` (a fixed coordinate or a
        trajectory h(t)) on the solve times t_1, ..., t_Nt."""
        values = self.values[::-1] if self.reversed_time else self.values
        times = self.timegrid.solve_times
        xs = np.broadcast_to(_positions(location, times), times.shape)
        h = self.mesh.h
        k = np.clip((xs / h).astype(int), 0, self.mesh.element_count - 1)
        w = (xs - self.mesh.nodes[k]) / h
        rows = np.arange(1, self.timegrid.step_count + 1)
        return (1 - w) * values[rows, k] + w * values[rows, k + 1]

    def to_frame(self) -> pd.DataFrame:
        """Returns the field as a `DataFrame`: one row per time level, one
        column per node."""
        times = self.timegrid.times
        if self.reversed_time:
            times = self.timegrid.horizon - times
        index = pd.Index(times, name='s' if self.reversed_time else 't')
        columns = [f"x={x:.6g}" for x in self.mesh.nodes]
        return pd.DataFrame(self.values, index=index, columns=columns)

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        self.to_frame().to_csv(path, float_format='%.17g')
        return path


@dataclass(frozen=True)
class BoundaryControls:
    """Dirichlet boundary signals on the solve times; a missing side is an
    uncontrolled (homogeneous) boundary."""
    left: GridSignal | None = field(default=None, hash=False, compare=False)
    right: GridSignal | None = field(default=None, hash=False, compare=False)

    def __post_init__(self):
        if self.left is None and self.right is None:
            raise ValueError("at least one boundary control must be given")
        for name in ('left', 'right'):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.asarray(v, dtype=float))

    @property
    def sides(self) -> tuple[str, ...]:
        return tuple(s for s in ('left', 'right') if getattr(self, s) is not None)

    def check(self, timegrid: TimeGrid) -> BoundaryControls:
        for side in self.sides:
            timegrid.check_signal(getattr(self, side), f"{side} control")
        return self

    def __neg__(self) -> BoundaryControls:
        return BoundaryControls(
            None if self.left is None else -self.left,
            None if self.right is None else -self.right
        )

    @classmethod
    def zeros(cls, timegrid: TimeGrid, sides: tuple[str, ...] = ('right',)) -> BoundaryControls:
        z = np.zeros(timegrid.step_count)
        return cls(
            z.copy() if 'left' in sides else None,
            z.copy() if 'right' in sides else None
        )


def _positions(location: Location, times: np.ndarray) -> np.ndarray:
    if callable(location):
        return np.asarray(location(times), dtype=float)
    return np.full(np.shape(times), float(location))


@dataclass(frozen=True)
class ObservationSet:
    """The N observation locations, each a fixed coordinate or a trajectory
    (any vectorized callable h(t), e.g. a `Trajectory`)."""
    locations: tuple[Location, ...]

    def __post_init__(self):
        object.__setattr__(self, 'locations', tuple(self.locations))
        if len(self.locations) not in (1, 2, 3):
            raise ValueError(
                f"between one and three observation locations are supported, "
                f"got {len(self.locations)}"
            )

    @property
    def count(self) -> int:
        return len(self.locations)

    @property
    def is_moving(self) -> bool:
        return any(callable(loc) for loc in self.locations)

    def positions(self, times: np.ndarray | float) -> np.ndarray:
        """Returns the positions at `times` as an array of shape
        (len(times), N)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        return np.stack([_positions(loc, times) for loc in self.locations], axis=1)

    def validate(self, mesh: Mesh, timegrid: TimeGrid) -> ObservationSet:
        """Raises `ValueError` unless every location lies strictly inside
        (0, L) at every time level and the locations are strictly ordered."""
        xs = self.positions(timegrid.times)
        if not np.all(np.isfinite(xs)):
            raise ValueError("observation positions must be finite")
        if np.any(xs <= 0.0) or np.any(xs >= mesh.length):
            raise ValueError(
                f"observation points must lie strictly inside (0, {mesh.length}); "
                f"range found [{xs.min()}, {xs.max()}]"
            )
        if self.count > 1 and np.any(np.diff(xs, axis=1) <= 0.0):
            raise ValueError("observation points must be strictly increasing (x_1 < x_2 < ...)")
        return self


@dataclass(frozen=True)
class PointSourceTable:
    """Element indices and hat-function weights of every observation point at
    every time level; row n belongs to t_n."""
    elements: np.ndarray
    left_weights: np.ndarray
    right_weights: np.ndarray


@lru_cache(maxsize=32)
def point_source_table(observations: ObservationSet, mesh: Mesh, timegrid: TimeGrid) -> PointSourceTable:
    xs = observations.positions(timegrid.times)
    elements = np.zeros(xs.shape, dtype=int)
    wl = np.zeros(xs.shape)
    wr = np.zeros(xs.shape)
    for (n, i), x in np.ndenumerate(xs):
        elements[n, i], wl[n, i], wr[n, i] = dirac_weights(mesh, float(x))
    return PointSourceTable(elements, wl, wr)
