"""Named target signals and observation trajectories used by the experiment
configurations."""
from __future__ import annotations
from typing import Any, Callable
import numpy as np
import sympy as sp
from tracking_control.discretization.coefficients import T_SYMBOL
from tracking_control.moving import Trajectory


t = T_SYMBOL


def _sinusoid(T, amplitude=1.0, oscillations=2.0):
    return amplitude * sp.sin(2 * sp.pi * oscillations * t / T)


def _ramp(T, rate=1.0, scale=1.0):
    return scale * t * (1 - sp.exp(-rate * t))


def _squared_sine(T, amplitude=1.0):
    return amplitude * sp.sin(sp.pi * t / T) ** 2


def _gaussian(T, amplitude=1.0, center=None, width=None):
    center = T / 2 if center is None else center
    width = T / 16 if width is None else width
    if not width > 0:
        raise ValueError(f"gaussian width must be positive, got {width}")
    return amplitude * sp.exp(-(t - center) ** 2 / (2 * width ** 2))


def _constant(T, value=0.0):
    return sp.Float(value)


def _expression(T, expression='0'):
    expr = sp.sympify(expression, locals={'t': t, 'T': sp.Float(T)})
    if not expr.free_symbols <= {t}:
        raise ValueError(f"target expression may only depend on t, got {expression!r}")
    return expr


WAVEFORMS: dict[str, Callable[..., sp.Expr]] = {
    'sinusoid': _sinusoid,          # A sin(2π m t / T)
    'ramp': _ramp,                  # s t (1 - exp(-k t)); s = 0.5 gives the half ramp
    'squared_sine': _squared_sine,  # A sin²(π t / T)
    'gaussian': _gaussian,          # A exp(-(t - t0)² / (2σ²)), t0 = T/2, σ = T/16 by default
    'constant': _constant,
    'expression': _expression,
}


TRAJECTORY_PARAMETERS: dict[str, set[str]] = {
    'sine': {'center', 'amplitude'},
    'constant': {'value'},
    'expression': {'expression'},
}


def target_expression(kind: str, params: dict[str, Any], horizon: float) -> sp.Expr:
    """Returns the target `kind` with parameters `params` as an expression
    in t. Raises `ValueError` for unknown kinds or parameters."""
    try:
        builder = WAVEFORMS[kind]
    except KeyError:
        raise ValueError(f"unknown target kind {kind!r}; choose from {sorted(WAVEFORMS)}") from None
    try:
        return sp.sympify(builder(horizon, **params))
    except TypeError as exc:
        raise ValueError(f"invalid parameters for target {kind!r}: {exc}") from None


def target_function(kind: str, params: dict[str, Any], horizon: float) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized callable w(t) of a named target."""
    fn = sp.lambdify(t, target_expression(kind, params, horizon), modules='numpy')
    return lambda times: np.asarray(fn(np.asarray(times, dtype=float)), dtype=float) + 0 * np.asarray(times, dtype=float)


def build_trajectory(kind: str, params: dict[str, Any], horizon: float) -> Trajectory:
    """Returns a named observation trajectory: 'sine' (h = c + A sin(π t/T),
    parameters `center`, `amplitude`), 'constant' (`value`) or 'expression'
    (`expression` in t)."""
    allowed = TRAJECTORY_PARAMETERS.get(kind)
    if allowed is None:
        raise ValueError(f"unknown trajectory kind {kind!r}; choose from {sorted(TRAJECTORY_PARAMETERS)}")
    unknown = set(params) - allowed
    if unknown:
        raise ValueError(f"unknown parameters {sorted(unknown)} for trajectory {kind!r}")
    try:
        if kind == 'sine':
            return Trajectory.sine(params.get('center', 0.5), params.get('amplitude', 0.15), horizon)
        if kind == 'constant':
            return Trajectory.constant(params['value'], horizon)
        if kind == 'expression':
            return Trajectory(str(params['expression']), horizon)
    except KeyError as exc:
        raise ValueError(f"trajectory {kind!r} needs parameter {exc}") from None
    raise AssertionError(kind)
