from __future__ import annotations
from dataclasses import dataclass
from functools import cached_property
import numpy as np
import sympy as sp
from tracking_control.discretization import TimeGrid
from tracking_control.discretization.coefficients import T_SYMBOL


EXTREMA_SAMPLES = 10_001


@dataclass(frozen=True)
class Trajectory:
    """A moving observation point h(t) on [0, T], given as an expression in
    the symbol `t` (e.g. `'0.5 + 0.15*sin(pi*t/0.5)'`).

    Instances are callable with a scalar or an array of times.
    """
    expression: str
    horizon: float

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError(f"trajectory horizon must be positive, got {self.horizon}")
        unknown = self.symbolic.free_symbols - {T_SYMBOL}
        if unknown:
            raise ValueError(
                f"trajectory expression may only depend on t, found {sorted(map(str, unknown))}"
            )

    @classmethod
    def constant(cls, value: float, horizon: float = 1.0) -> Trajectory:
        return cls(repr(float(value)), horizon)

    @classmethod
    def sine(cls, center: float, amplitude: float, horizon: float) -> Trajectory:
        """h(t) = center + amplitude * sin(π t / T)."""
        return cls(f"{float(center)!r} + {float(amplitude)!r}*sin(pi*t/{float(horizon)!r})", horizon)

    @cached_property
    def symbolic(self) -> sp.Expr:
        return sp.sympify(self.expression, locals={'t': T_SYMBOL})

    @cached_property
    def _fn(self):
        return sp.lambdify(T_SYMBOL, self.symbolic, modules='numpy')

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.asarray(self._fn(t), dtype=float) + np.zeros_like(t)

    @cached_property
    def samples(self) -> np.ndarray:
        """h on a dense uniform sampling of [0, T]."""
        return self(np.linspace(0.0, self.horizon, EXTREMA_SAMPLES))

    @property
    def minimum(self) -> float:
        return float(np.min(self.samples))

    @property
    def maximum(self) -> float:
        return float(np.max(self.samples))

    def sampled(self, timegrid: TimeGrid) -> np.ndarray:
        """h on the solve times of `timegrid`."""
        return self(timegrid.solve_times)

    def validate(self, length: float = 1.0) -> Trajectory:
        """Raises `ValueError` unless 0 < min h and max h < `length`."""
        if not np.all(np.isfinite(self.samples)):
            raise ValueError(f"trajectory {self.expression} is not finite on [0, {self.horizon}]")
        if not (0.0 < self.minimum and self.maximum < length):
            raise ValueError(
                f"trajectory must stay strictly inside (0, {length}); "
                f"found range [{self.minimum}, {self.maximum}]"
            )
        return self
