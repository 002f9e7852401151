"""Explicit solutions of the heat equation y_t = y_xx parameterized by the
trace w1 = y(., x1) and the flux w2 = y_x(., x1) at an interior point:

    y(t, x) = Σ_i w1^(i)(t) / (2i)! (x - x1)^(2i)
            + Σ_i w2^(i)(t) / (2i+1)! (x - x1)^(2i+1)

Only polynomial targets are supported: the series then terminates and every
identity holds to round-off.
"""
from __future__ import annotations
from dataclasses import dataclass
from functools import cached_property
from math import factorial
from typing import Callable, NamedTuple
import numpy as np
import pandas as pd
import sympy as sp
from tracking_control.discretization import TimeGrid
from tracking_control.discretization.coefficients import T_SYMBOL, X_SYMBOL
from tracking_control.solvers import BoundaryControls


def _vectorized(expr: sp.Expr, *symbols) -> Callable:
    fn = sp.lambdify(symbols, expr, modules='numpy')

    def wrapped(*args):
        args = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in args))
        return np.asarray(fn(*args), dtype=float) + np.zeros_like(args[0])
    return wrapped


@dataclass(frozen=True)
class SeriesTarget:
    """The two flat outputs w1(t), w2(t), polynomials in `t`."""
    w1: sp.Expr
    w2: sp.Expr

    def __post_init__(self):
        for name in ('w1', 'w2'):
            expr = getattr(self, name)
            if not isinstance(expr, sp.Expr):
                raise ValueError(f"{name} must be a sympy expression")
            if not expr.free_symbols <= {T_SYMBOL} or not expr.is_polynomial(T_SYMBOL):
                raise ValueError(f"{name} must be a polynomial in t, got {expr}")

    @classmethod
    def from_expressions(cls, w1: str | float | sp.Expr = 0, w2: str | float | sp.Expr = 0) -> SeriesTarget:
        parse = lambda e: e if isinstance(e, sp.Expr) else sp.sympify(e, locals={'t': T_SYMBOL})
        return cls(parse(w1), parse(w2))

    @property
    def degree(self) -> int:
        """Largest polynomial degree of the two targets (0 for zero targets)."""
        degrees = [sp.Poly(e, T_SYMBOL).degree() for e in (self.w1, self.w2) if e != 0]
        return max(degrees, default=0)

    def derivative(self, which: int, order: int) -> sp.Expr:
        """Exact derivative w_which^(order)."""
        expr = self.w1 if which == 1 else self.w2
        return sp.diff(expr, T_SYMBOL, order) if order else expr


@dataclass(frozen=True)
class SeriesSolution:
    """The truncated series anchored at `x1` with `order` + 1 terms per
    part."""
    targets: SeriesTarget
    x1: float
    order: int

    @cached_property
    def even_coefficients(self) -> list[sp.Expr]:
        """w1^(i)(t) / (2i)!, i = 0..K."""
        return [self.targets.derivative(1, i) / factorial(2 * i) for i in range(self.order + 1)]

    @cached_property
    def odd_coefficients(self) -> list[sp.Expr]:
        """w2^(i)(t) / (2i+1)!, i = 0..K."""
        return [self.targets.derivative(2, i) / factorial(2 * i + 1) for i in range(self.order + 1)]

    @cached_property
    def symbolic(self) -> sp.Expr:
        s = X_SYMBOL - sp.Float(self.x1)
        return sum(
            (c * s ** (2 * i) for i, c in enumerate(self.even_coefficients)),
            sp.Integer(0)
        ) + sum(
            (c * s ** (2 * i + 1) for i, c in enumerate(self.odd_coefficients)),
            sp.Integer(0)
        )

    @cached_property
    def _functions(self) -> dict[str, Callable]:
        y = self.symbolic
        return {
            'y': _vectorized(y, T_SYMBOL, X_SYMBOL),
            'dt': _vectorized(sp.diff(y, T_SYMBOL), T_SYMBOL, X_SYMBOL),
            'dx': _vectorized(sp.diff(y, X_SYMBOL), T_SYMBOL, X_SYMBOL),
            'dxx': _vectorized(sp.diff(y, X_SYMBOL, 2), T_SYMBOL, X_SYMBOL),
        }

    def evaluate(self, t, x) -> np.ndarray:
        return self._functions['y'](t, x)

    def dt(self, t, x) -> np.ndarray:
        return self._functions['dt'](t, x)

    def dx(self, t, x) -> np.ndarray:
        return self._functions['dx'](t, x)

    def dxx(self, t, x) -> np.ndarray:
        return self._functions['dxx'](t, x)

    def residual(self, t, x) -> np.ndarray:
        """y_t - y_xx; zero up to round-off when order >= target degree."""
        return self.dt(t, x) - self.dxx(t, x)


def build_series(targets: SeriesTarget, x1: float, order: int | None = None) -> SeriesSolution:
    """Builds the series anchored at `x1`. The truncation order K defaults to
    the target degree and may not be lower (the series would not solve the
    heat equation)."""
    order = targets.degree if order is None else order
    if order < targets.degree:
        raise ValueError(
            f"truncation order {order} is below the target degree {targets.degree}"
        )
    return SeriesSolution(targets, float(x1), int(order))


class SeriesControls(NamedTuple):
    """Closed-form boundary controls v0(t) = y(t, 0) and vL(t) = y(t, L)."""
    left: Callable[[np.ndarray], np.ndarray]
    right: Callable[[np.ndarray], np.ndarray]

    def sampled(self, timegrid: TimeGrid) -> BoundaryControls:
        """The controls on the solve times of `timegrid`."""
        return BoundaryControls(timegrid.sample(self.left), timegrid.sample(self.right))


def series_controls(solution: SeriesSolution, length: float = 1.0) -> SeriesControls:
    """Returns the controls y(t, 0) and y(t, L) of the series solution."""
    return SeriesControls(
        left=lambda t: solution.evaluate(t, 0.0),
        right=lambda t: solution.evaluate(t, length)
    )


def controls_frame(
    solution: SeriesSolution,
    times: np.ndarray,
    length: float = 1.0,
    points: int = 101
) -> pd.DataFrame:
    """Tabulates the series controls on `times`: columns t, v0, vL and
    residual, the largest |y_t - y_xx| over `points` equally spaced x in
    [0, `length`] at each time."""
    times = np.asarray(times, dtype=float)
    controls = series_controls(solution, length)
    t, x = np.meshgrid(times, np.linspace(0.0, length, points), indexing='ij')
    return pd.DataFrame({
        't': times,
        'v0': controls.left(times),
        'vL': controls.right(times),
        'residual': np.max(np.abs(solution.residual(t, x)), axis=1)
    })
