from __future__ import annotations
from dataclasses import dataclass
from functools import cached_property
from typing import Callable
import numpy as np
from tracking_control import Quantity
from tracking_control.pint_setup import magnitude, unit_label


GridSignal = np.ndarray
"""A time signal sampled on the solve times t_1, ..., t_Nt of a `TimeGrid`
(one value per implicit Euler step; the value at t_0 is never an unknown)."""


@dataclass(frozen=True)
class Mesh:
    """Uniform partition of the interval [0, L] into `element_count`
    elements. Node j sits at x_j = j * L / N_e.
    """
    length: float
    element_count: int
    units: str = ''

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"mesh length must be positive, got {self.length}")
        if int(self.element_count) != self.element_count or self.element_count < 2:
            raise ValueError(
                f"a mesh needs at least 2 elements, got {self.element_count}"
            )

    @property
    def h(self) -> float:
        """Element size h_e = L / N_e."""
        return self.length / self.element_count

    @cached_property
    def nodes(self) -> np.ndarray:
        # (j * L) / N_e keeps nodes that are exact binary fractions exact
        # (e.g. x = 0.5 on N_e = 200).
        return np.arange(self.element_count + 1) * self.length / self.element_count

    @property
    def node_count(self) -> int:
        return self.element_count + 1

    @property
    def interior_count(self) -> int:
        return self.element_count - 1

    def locate(self, x: float) -> int:
        """Returns the index k of the element [x_k, x_k+1] containing `x`
        (the last element for x = L)."""
        k = int(np.searchsorted(self.nodes, x, side='right')) - 1
        return min(max(k, 0), self.element_count - 1)

    def node_index(self, x: float, tol: float = 1e-9) -> int:
        """Returns the index of the node at `x`; raises `ValueError` if `x`
        is not a node of the mesh."""
        j = int(round(x / self.h))
        if abs(j * self.h - x) > tol * max(1.0, self.length):
            raise ValueError(f"point {x} is not a node of the mesh (h = {self.h})")
        return j


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of [0, T] into `step_count` implicit Euler steps."""
    horizon: float
    step_count: int
    units: str = ''

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError(f"time horizon must be positive, got {self.horizon}")
        if int(self.step_count) != self.step_count or self.step_count < 1:
            raise ValueError(f"at least one time step is needed, got {self.step_count}")

    @property
    def dt(self) -> float:
        return self.horizon / self.step_count

    @cached_property
    def times(self) -> np.ndarray:
        """All time levels t_0, ..., t_Nt."""
        return np.arange(self.step_count + 1) * self.horizon / self.step_count

    @property
    def solve_times(self) -> np.ndarray:
        """The times t_1, ..., t_Nt on which grid signals live."""
        return self.times[1:]

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> GridSignal:
        """Samples the time function `fn` on the solve times."""
        values = np.asarray(fn(self.solve_times), dtype=float)
        return np.broadcast_to(values, self.solve_times.shape).copy()

    def check_signal(self, values, name: str = 'signal') -> GridSignal:
        """Returns `values` as a float array; raises `ValueError` if its
        length differs from the number of steps."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.step_count,):
            raise ValueError(
                f"{name} must hold {self.step_count} values (one per step), "
                f"got shape {values.shape}"
            )
        return values


def build_mesh(length: float | str | Quantity, element_count: int) -> Mesh:
    """Creates a uniform `Mesh` of [0, `length`].

    Parameters
    ----------
    length:
        Length L of the spatial domain. A pint `Quantity` (or a string such as
        `'1 m'`) is accepted; only its magnitude enters the computation and
        its units are kept as a label.
    element_count:
        Number of elements N_e (at least 2).
    """
    return Mesh(magnitude(length), element_count, unit_label(length))


def build_time_grid(
    horizon: float | str | Quantity,
    step_count: int | None = None,
    dt: float | None = None
) -> TimeGrid:
    """Creates a uniform `TimeGrid` of [0, `horizon`] from either the number of
    steps or the step size `dt` (rounded to the nearest whole number of steps).
    """
    T = magnitude(horizon)
    if step_count is None:
        if dt is None or not dt > 0:
            raise ValueError("either `step_count` or a positive `dt` must be given")
        step_count = max(1, int(round(T / dt)))
    return TimeGrid(T, step_count, unit_label(horizon))
