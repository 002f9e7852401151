"""Time-dependent changes of the space variable that turn moving observation
points into fixed ones.

On the rescaled domain [0, 1] (ξ = x / L) a map is a sum of monomials

    single:  χ(t, ξ) = α(t) ξ^n + β(t) ξ
    double:  χ(t, ξ) = α(t) ξ^n + β(t) ξ^r + γ(t) ξ

with coefficients summing to one, so that both ends of the domain stay in
place. A single map sends h(t) to the constant m = min h; a double map sends
a fixed point k to k̃ and h(t) to m̃.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal
import numpy as np
import pandas as pd
from scipy.interpolate import interp1d
from tracking_control.errors import ConstructionError
from tracking_control.discretization import TimeGrid
from .trajectory import Trajectory, EXTREMA_SAMPLES


logger = logging.getLogger(__name__)

MAX_EXPONENT = 200
MIN_M_TILDE = 1e-8
RATE_STEPS = 2000


@dataclass(frozen=True, eq=False)
class DiffeoMap:
    """A straightening map χ(t, x) on [0, T] x [0, L].

    Parameters
    ----------
    mode: {'single', 'double'}
        Number of straightened points.
    trajectory:
        The moving point h(t) (physical units).
    exponents:
        (n, 1) for a single map, (n, r, 1) for a double map.
    length:
        Length L of the physical domain.
    targets:
        Rescaled images of the straightened points: (m,) for a single map,
        (k̃, m̃) for a double map.
    fixed_point:
        The fixed point k (physical units) of a double map.
    rate_steps:
        Number of steps of the grid on which the time derivatives of the
        coefficients are computed by centered differences.
    """
    mode: Literal['single', 'double']
    trajectory: Trajectory
    exponents: tuple[int, ...]
    length: float = 1.0
    targets: tuple[float, ...] = ()
    fixed_point: float | None = None
    rate_steps: int = RATE_STEPS
    delta_ratio: float | None = field(default=None, repr=False)

    @property
    def horizon(self) -> float:
        return self.trajectory.horizon

    @property
    def n(self) -> int:
        return self.exponents[0]

    @property
    def r(self) -> int | None:
        return self.exponents[1] if self.mode == 'double' else None

    @property
    def straightened_points(self) -> tuple[float, ...]:
        """Images of the straightened points in physical units."""
        return tuple(self.length * v for v in self.targets)

    def _h(self, t) -> np.ndarray:
        return self.trajectory(t) / self.length

    def coefficients(self, t) -> np.ndarray:
        """Returns the coefficient signals at the times `t`; shape
        (len(exponents), len(t)), ordered like `exponents`."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        h = self._h(t)
        if self.mode == 'single':
            (m,) = self.targets
            hn = h ** self.n
            return np.stack([(h - m) / (h - hn), (m - hn) / (h - hn)])
        dets = _cramer_determinants(self.fixed_point / self.length, h, self.n, self.r, *self.targets)
        return np.stack([dets['alpha'], dets['beta'], dets['gamma']]) / dets['main']

    @cached_property
    def _rate_interpolant(self) -> interp1d:
        times = np.linspace(0.0, self.horizon, self.rate_steps + 1)
        values = self.coefficients(times)
        rates = np.gradient(values, times, axis=1, edge_order=2)
        return interp1d(times, rates, axis=1, kind='cubic', fill_value='extrapolate')

    def rates(self, t) -> np.ndarray:
        """Time derivatives of the coefficient signals at the times `t`."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self._rate_interpolant(t)

    # Evaluation in physical units. `t` is a scalar, `x` a scalar or array.

    def _monomials(self, x, order: int) -> np.ndarray:
        xi = np.asarray(x, dtype=float) / self.length
        rows = []
        for p in self.exponents:
            if order == 0:
                rows.append(xi ** p)
            elif order == 1:
                rows.append(p * xi ** (p - 1))
            else:
                rows.append(p * (p - 1) * xi ** (p - 2) if p >= 2 else np.zeros_like(xi))
        return np.stack(rows)

    def _combine(self, weights: np.ndarray, basis: np.ndarray) -> np.ndarray:
        return np.tensordot(weights[:, 0], basis, axes=1)

    def chi(self, t: float, x) -> np.ndarray:
        return self.length * self._combine(self.coefficients(t), self._monomials(x, 0))

    def chi_x(self, t: float, x) -> np.ndarray:
        return self._combine(self.coefficients(t), self._monomials(x, 1))

    def chi_xx(self, t: float, x) -> np.ndarray:
        return self._combine(self.coefficients(t), self._monomials(x, 2)) / self.length

    def chi_t(self, t: float, x) -> np.ndarray:
        return self.length * self._combine(self.rates(t), self._monomials(x, 0))

    def monotonicity_margin(self, times, points: int = 1001) -> np.ndarray:
        """Returns min over x of ∂x χ at each of the `times`."""
        x = np.linspace(0.0, self.length, points)
        basis = self._monomials(x, 1)
        coeffs = self.coefficients(times)
        return np.min(coeffs.T @ basis, axis=1)

    def to_frame(self, timegrid: TimeGrid | None = None) -> pd.DataFrame:
        """Coefficient signals and monotonicity margin per time level."""
        times = timegrid.times if timegrid is not None else np.linspace(0.0, self.horizon, 201)
        names = ['alpha', 'beta', 'gamma'][:len(self.exponents)]
        data = dict(zip(names, self.coefficients(times)))
        data['trajectory'] = self.trajectory(times)
        data['margin'] = self.monotonicity_margin(times)
        return pd.DataFrame(data, index=pd.Index(times, name='t'))


def _cramer_determinants(k, h, n, r, k_tilde, m_tilde) -> dict[str, np.ndarray]:
    """Determinants of the 3x3 system α + β + γ = 1, α k^n + β k^r + γ k = k̃,
    α h^n + β h^r + γ h = m̃ (one system per value of h)."""
    h = np.asarray(h, dtype=float)
    ones = np.ones_like(h)
    rows = [
        (ones, ones, ones, ones),
        (k ** n * ones, k ** r * ones, k * ones, k_tilde * ones),
        (h ** n, h ** r, h, m_tilde * ones),
    ]

    def det(c0, c1, c2):
        (a1, b1, c1_), (a2, b2, c2_), (a3, b3, c3_) = (
            (row[c0], row[c1], row[c2]) for row in rows
        )
        return (
            a1 * (b2 * c3_ - c2_ * b3)
            - b1 * (a2 * c3_ - c2_ * a3)
            + c1_ * (a2 * b3 - b2 * a3)
        )

    return {
        'main': det(0, 1, 2),
        'alpha': det(3, 1, 2),
        'beta': det(0, 3, 2),
        'gamma': det(0, 1, 3),
    }


def _sample_times(horizon: float) -> np.ndarray:
    return np.linspace(0.0, horizon, EXTREMA_SAMPLES)


def build_single_diffeo(h: Trajectory, length: float = 1.0, rate_steps: int = RATE_STEPS) -> DiffeoMap:
    """Builds χ(t, ξ) = α(t) ξ^n + β(t) ξ that sends h(t) to m = min h.

    n is the smallest integer n >= 2 with m - M^n > 0 (M = max h, all on the
    rescaled domain), which makes β positive and χ strictly increasing.
    """
    h.validate(length)
    m = h.minimum / length
    M = h.maximum / length
    n = 2
    while not m - M ** n > 0:
        n += 1
        if n > MAX_EXPONENT:
            raise ConstructionError(f"no exponent n <= {MAX_EXPONENT} with m - M^n > 0 (m = {m}, M = {M})")
    logger.debug("single map for %s: n = %d, m = %.6g", h.expression, n, m)
    return DiffeoMap('single', h, (n, 1), length, (m,), rate_steps=rate_steps)


def build_double_diffeo(
    k: float,
    h: Trajectory,
    length: float = 1.0,
    rate_steps: int = RATE_STEPS
) -> DiffeoMap:
    """Builds χ(t, ξ) = α ξ^n + β ξ^r + γ ξ sending the fixed point k to k̃
    and h(t) to m̃, with α, β, γ > 0.

    The parameters are selected in four steps (rescaled domain):

    1. ratio δ = k̃ / m̃ = 0.5 k / max h;
    2. r = smallest integer r >= 2 with (k / min h)^r < δ;
    3. m̃ = 0.1, halved until the α-numerator determinant is negative at
       every sampled time; k̃ = δ m̃;
    4. n = smallest integer n > r making the main, β- and γ-numerator
       determinants negative at every sampled time.

    Raises `ConstructionError` when m̃ drops below 1e-8 or n exceeds 200.
    """
    h.validate(length)
    if not 0.0 < k < h.minimum:
        raise ValueError(f"fixed point k must satisfy 0 < k < min h = {h.minimum}, got {k}")
    kk = k / length
    h_min = h.minimum / length
    h_max = h.maximum / length
    hs = h(_sample_times(h.horizon)) / length

    delta = 0.5 * kk / h_max
    r = 2
    while not (kk / h_min) ** r < delta:
        r += 1
        if r > MAX_EXPONENT:
            raise ConstructionError(f"no exponent r <= {MAX_EXPONENT} with (k/min h)^r < {delta}")

    m_tilde = 0.1
    while True:
        dets = _cramer_determinants(kk, hs, r + 1, r, delta * m_tilde, m_tilde)
        if np.all(dets['alpha'] < 0):
            break
        m_tilde *= 0.5
        if m_tilde < MIN_M_TILDE:
            raise ConstructionError(
                f"alpha-numerator determinant stays nonnegative down to m~ = {MIN_M_TILDE}"
            )
    k_tilde = delta * m_tilde

    n = r + 1
    while True:
        dets = _cramer_determinants(kk, hs, n, r, k_tilde, m_tilde)
        failing = [name for name in ('main', 'beta', 'gamma') if not np.all(dets[name] < 0)]
        if not failing:
            break
        n += 1
        if n > MAX_EXPONENT:
            raise ConstructionError(
                f"no exponent n <= {MAX_EXPONENT}: determinant(s) {', '.join(failing)} "
                f"not negative on the whole trajectory"
            )
    logger.debug(
        "double map for k = %.6g, %s: n = %d, r = %d, k~ = %.6g, m~ = %.6g",
        k, h.expression, n, r, k_tilde, m_tilde
    )
    return DiffeoMap(
        'double', h, (n, r, 1), length, (k_tilde, m_tilde),
        fixed_point=k, rate_steps=rate_steps, delta_ratio=delta
    )


def determinant_signs(diffeo: DiffeoMap, times=None) -> dict[str, np.ndarray]:
    """Returns the main, α-, β- and γ-numerator determinants of a double map
    at `times` (default: the dense sampling of [0, T])."""
    if diffeo.mode != 'double':
        raise ValueError("determinants are only defined for a double map")
    times = _sample_times(diffeo.horizon) if times is None else np.asarray(times, dtype=float)
    return _cramer_determinants(
        diffeo.fixed_point / diffeo.length,
        diffeo.trajectory(times) / diffeo.length,
        diffeo.n, diffeo.r, *diffeo.targets
    )


def invert(diffeo: DiffeoMap, t: float, xi, tol: float = 1e-12) -> np.ndarray | float:
    """Returns η(t, xi), the solution x of χ(t, x) = xi, for `xi` in [0, L].

    Bisection on the strictly increasing map brackets the root; a few Newton
    steps then refine it to |χ(t, η) - xi| <= `tol`.
    """
    L = diffeo.length
    target = np.asarray(xi, dtype=float)
    scalar = target.ndim == 0
    target = np.atleast_1d(target)
    if np.any(target < -tol * L) or np.any(target > L * (1 + tol)):
        raise ValueError(f"points to invert must lie in [0, {L}]")
    lo = np.zeros_like(target)
    hi = np.full_like(target, L)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        above = diffeo.chi(t, mid) > target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    x = 0.5 * (lo + hi)
    for _ in range(3):
        residual = diffeo.chi(t, x) - target
        if np.all(np.abs(residual) <= tol * max(1.0, L)):
            break
        x = np.clip(x - residual / diffeo.chi_x(t, x), 0.0, L)
    return float(x[0]) if scalar else x
