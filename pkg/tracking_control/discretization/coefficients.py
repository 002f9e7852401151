from __future__ import annotations
from dataclasses import dataclass, field
from typing import Callable
import numpy as np
import sympy as sp
from .mesh import Mesh, TimeGrid


CoefficientFunction = Callable[[float | np.ndarray, np.ndarray], np.ndarray]
"""A coefficient as a function of time `t` and position(s) `x`."""

T_SYMBOL, X_SYMBOL = sp.symbols('t x', real=True)


def _broadcasting(fn: Callable) -> CoefficientFunction:
    # lambdified constants return a scalar; make every coefficient return an
    # array shaped like `x`.
    def wrapped(t, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(fn(t, x), dtype=float) + np.zeros_like(x)
    return wrapped


def _lambdify(expr: sp.Expr) -> CoefficientFunction:
    fn = sp.lambdify((T_SYMBOL, X_SYMBOL), expr, modules='numpy')
    return _broadcasting(fn)


def _parse(expr: str | float | sp.Expr) -> sp.Expr:
    if isinstance(expr, sp.Expr):
        return expr
    return sp.sympify(expr, locals={'t': T_SYMBOL, 'x': X_SYMBOL})


@dataclass(frozen=True)
class CoefficientSet:
    """The coefficients of the parabolic operator

        L y = -a(t,x) y_xx + b(t,x) y_x + c(t,x) y

    together with the spatial derivatives a_x, a_xx and b_x needed by the
    adjoint operator. Derivatives that are not supplied are approximated by
    centered finite differences.

    Use `CoefficientSet.constant()` for constant coefficients,
    `CoefficientSet.from_expressions()` for coefficients given as formulas in
    `t` and `x` (derivatives are then exact), or the constructor directly for
    arbitrary vectorized callables `fn(t, x)`.
    """
    a: CoefficientFunction
    b: CoefficientFunction
    c: CoefficientFunction
    a0: float
    time_dependent: bool = False
    a_x: CoefficientFunction | None = None
    a_xx: CoefficientFunction | None = None
    b_x: CoefficientFunction | None = None
    fd_scale: float = 1.0
    expressions: dict[str, str] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.a0 > 0:
            raise ValueError(f"ellipticity floor a0 must be positive, got {self.a0}")

    @classmethod
    def constant(cls, a: float = 1.0, b: float = 0.0, c: float = 0.0) -> CoefficientSet:
        """Creates constant coefficients (a > 0)."""
        if not a > 0:
            raise ValueError(f"diffusion coefficient must be positive, got {a}")
        return cls.from_expressions(a, b, c, a0=a)

    @classmethod
    def from_expressions(
        cls,
        a: str | float | sp.Expr,
        b: str | float | sp.Expr = 0,
        c: str | float | sp.Expr = 0,
        a0: float | None = None,
        length: float = 1.0,
        times: np.ndarray | None = None
    ) -> CoefficientSet:
        """Creates coefficients from formulas in the symbols `t` and `x`, e.g.
        `a='1 + 0.15*cos(pi*x)'`.

        Parameters
        ----------
        a, b, c:
            Expressions (strings parsed by sympy, numbers or sympy
            expressions).
        a0:
            Ellipticity floor. If None, the minimum of `a` sampled on
            [0, `length`] (and on `times` if `a` depends on time) is taken.
        length:
            Length of the spatial domain; used to sample `a` for the floor and
            to scale finite-difference steps.
        times:
            Sample times for the floor of a time-dependent `a` (default: 101
            points on [0, 1]).
        """
        exprs = {name: _parse(e) for name, e in (('a', a), ('b', b), ('c', c))}
        for name, e in exprs.items():
            unknown = e.free_symbols - {T_SYMBOL, X_SYMBOL}
            if unknown:
                raise ValueError(
                    f"coefficient {name} contains unknown symbols "
                    f"{sorted(map(str, unknown))}; only t and x are allowed"
                )
        time_dependent = any(T_SYMBOL in e.free_symbols for e in exprs.values())
        fa = _lambdify(exprs['a'])
        if a0 is None:
            xs = np.linspace(0.0, length, 401)
            ts = np.linspace(0.0, 1.0, 101) if times is None else np.asarray(times)
            a0 = float(min(np.min(fa(t, xs)) for t in ts))
        return cls(
            a=fa,
            b=_lambdify(exprs['b']),
            c=_lambdify(exprs['c']),
            a0=a0,
            time_dependent=time_dependent,
            a_x=_lambdify(sp.diff(exprs['a'], X_SYMBOL)),
            a_xx=_lambdify(sp.diff(exprs['a'], X_SYMBOL, 2)),
            b_x=_lambdify(sp.diff(exprs['b'], X_SYMBOL)),
            fd_scale=max(1.0, length),
            expressions={name: str(e) for name, e in exprs.items()}
        )

    # Derivatives: supplied functions or centered differences.

    def da_dx(self, t, x) -> np.ndarray:
        if self.a_x is not None:
            return self.a_x(t, x)
        return self._central_first(self.a, t, x)

    def d2a_dx2(self, t, x) -> np.ndarray:
        if self.a_xx is not None:
            return self.a_xx(t, x)
        h = 1e-4 * self.fd_scale
        x = np.asarray(x, dtype=float)
        return (self.a(t, x + h) - 2 * self.a(t, x) + self.a(t, x - h)) / h ** 2

    def db_dx(self, t, x) -> np.ndarray:
        if self.b_x is not None:
            return self.b_x(t, x)
        return self._central_first(self.b, t, x)

    def _central_first(self, fn: CoefficientFunction, t, x) -> np.ndarray:
        h = 1e-6 * self.fd_scale
        x = np.asarray(x, dtype=float)
        return (fn(t, x + h) - fn(t, x - h)) / (2 * h)

    def validate(self, mesh: Mesh, timegrid: TimeGrid) -> None:
        """Checks the ellipticity floor a >= a0 on every (t_n, x_j) of the
        grid, and, for supplied derivative functions, their agreement with
        finite differences of a and b (relative tolerance 1e-4).

        Raises `ValueError` when a check fails.
        """
        x = mesh.nodes
        times = timegrid.times if self.time_dependent else timegrid.times[:1]
        h1 = 1e-6 * self.fd_scale
        h2 = 1e-4 * self.fd_scale
        for t in times:
            a_vals = self.a(t, x)
            if not np.all(np.isfinite(a_vals)):
                raise ValueError(f"coefficient a is not finite at t = {t}")
            if np.min(a_vals) < self.a0 * (1 - 1e-12):
                j = int(np.argmin(a_vals))
                raise ValueError(
                    f"ellipticity violated: a({t}, {x[j]}) = {a_vals[j]} < a0 = {self.a0}"
                )
            checks = (
                ('a_x', self.a_x, lambda: (self.a(t, x + h1) - self.a(t, x - h1)) / (2 * h1)),
                ('a_xx', self.a_xx, lambda: (self.a(t, x + h2) - 2 * a_vals + self.a(t, x - h2)) / h2 ** 2),
                ('b_x', self.b_x, lambda: (self.b(t, x + h1) - self.b(t, x - h1)) / (2 * h1)),
            )
            for name, supplied, fd in checks:
                if supplied is None:
                    continue
                exact = supplied(t, x)
                approx = fd()
                scale = max(1.0, float(np.max(np.abs(exact))))
                if np.max(np.abs(exact - approx)) > 1e-4 * scale:
                    raise ValueError(
                        f"supplied derivative {name} disagrees with finite "
                        f"differences at t = {t}"
                    )

    @property
    def is_heat(self) -> bool:
        """True for the constant-coefficient heat operator (a = 1, b = c = 0)."""
        if self.expressions is None:
            return False
        e = self.expressions
        return (sp.sympify(e['a']) == 1) and (sp.sympify(e['b']) == 0) and (sp.sympify(e['c']) == 0)
