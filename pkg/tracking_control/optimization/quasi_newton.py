from __future__ import annotations
import logging
import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Literal
import numpy as np
from scipy.optimize import line_search
try:
    from scipy.optimize import LineSearchWarning
except ImportError:
    from scipy.optimize._linesearch import LineSearchWarning


logger = logging.getLogger(__name__)

DENSE_LIMIT = 2000
"""Largest number of unknowns for which the dense BFGS update is allowed."""


@dataclass(frozen=True)
class OptimOptions:
    """Settings of `minimize`.

    Parameters
    ----------
    max_iterations:
        Maximum number of accepted steps.
    gradient_tolerance:
        Stop when ||g|| <= gradient_tolerance * max(1, |f|).
    objective_tolerance:
        Stop when the decrease of f in one step is at most
        objective_tolerance * max(1, |f_old|, |f_new|).
    c1, c2:
        Sufficient-decrease and curvature constants of the strong Wolfe line
        search.
    memory:
        Number of stored (s, y) pairs of the limited-memory update.
    method: {'lbfgs', 'bfgs'}
        Limited-memory or dense inverse-Hessian update. The dense update is
        limited to `DENSE_LIMIT` unknowns.
    line_search_iterations:
        Maximum number of iterations of one line search.
    """
    max_iterations: int = 500
    gradient_tolerance: float = 1e-9
    objective_tolerance: float = 1e-12
    c1: float = 1e-4
    c2: float = 0.9
    memory: int = 20
    method: Literal['lbfgs', 'bfgs'] = 'lbfgs'
    line_search_iterations: int = 20

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be at least 1, got {self.max_iterations}")
        if not self.gradient_tolerance > 0 or not self.objective_tolerance > 0:
            raise ValueError("tolerances must be positive")
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError(f"line-search constants must satisfy 0 < c1 < c2 < 1, got {self.c1}, {self.c2}")
        if self.memory < 1:
            raise ValueError(f"memory must be at least 1, got {self.memory}")
        if self.method not in ('lbfgs', 'bfgs'):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class OptimReport:
    iterations: int
    objective: float
    gradient_norm: float
    reason: str
    history: list[float] = field(default_factory=list)
    function_evaluations: int = 0
    gradient_evaluations: int = 0

    @property
    def converged(self) -> bool:
        return self.reason in ('gradient tolerance', 'objective stalled')


class _LimitedMemory:
    """Inverse-Hessian approximation by the two-loop recursion."""

    def __init__(self, size: int) -> None:
        self.pairs: deque[tuple[np.ndarray, np.ndarray, float]] = deque(maxlen=size)

    def reset(self) -> None:
        self.pairs.clear()

    @property
    def empty(self) -> bool:
        return not self.pairs

    def update(self, s: np.ndarray, y: np.ndarray) -> None:
        self.pairs.append((s, y, 1.0 / float(np.dot(y, s))))

    def direction(self, g: np.ndarray) -> np.ndarray:
        q = g.copy()
        alphas = []
        for s, y, rho in reversed(self.pairs):
            a = rho * float(np.dot(s, q))
            q -= a * y
            alphas.append(a)
        if self.pairs:
            s, y, _ = self.pairs[-1]
            q *= float(np.dot(s, y)) / float(np.dot(y, y))
        for (s, y, rho), a in zip(self.pairs, reversed(alphas)):
            b = rho * float(np.dot(y, q))
            q += (a - b) * s
        return -q


class _DenseInverse:
    """Inverse-Hessian approximation by the dense BFGS update."""

    def __init__(self, size: int) -> None:
        self.size = size
        self.H: np.ndarray | None = None

    def reset(self) -> None:
        self.H = None

    @property
    def empty(self) -> bool:
        return self.H is None

    def update(self, s: np.ndarray, y: np.ndarray) -> None:
        rho = 1.0 / float(np.dot(y, s))
        I = np.eye(self.size)
        H = self.H
        if H is None:
            H = float(np.dot(s, y)) / float(np.dot(y, y)) * I
        A1 = I - rho * np.outer(s, y)
        A2 = I - rho * np.outer(y, s)
        self.H = A1 @ H @ A2 + rho * np.outer(s, s)

    def direction(self, g: np.ndarray) -> np.ndarray:
        if self.H is None:
            return -g
        return -(self.H @ g)


def minimize(
    objective: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    options: OptimOptions | None = None
) -> tuple[np.ndarray, OptimReport]:
    """Minimizes `objective` by a quasi-Newton method with a strong Wolfe line
    search (`scipy.optimize.line_search`).

    Parameters
    ----------
    objective:
        Function f(x) returning a float.
    gradient:
        Function returning the gradient of f at x.
    x0:
        Starting point (1D array).
    options:
        Settings, see `OptimOptions`.

    Returns
    -------
    tuple
        The last accepted iterate and an `OptimReport`. A failed line search
        is retried once along the steepest-descent direction with a fresh
        Hessian approximation; if that fails too, the current iterate is
        returned with reason "line-search breakdown".
    """
    # The dense variant follows scipy.optimize.minimize(method='BFGS') and the
    # limited-memory one L-BFGS-B without bounds; the loop is written out for
    # the objective-decrease stop and the accepted-value history.
    options = options or OptimOptions()
    x = np.array(x0, dtype=float).ravel()
    n = x.size
    counts = {'f': 0, 'g': 0}

    def f_counted(z):
        counts['f'] += 1
        return float(objective(z))

    def g_counted(z):
        counts['g'] += 1
        return np.asarray(gradient(z), dtype=float).ravel()

    if options.method == 'bfgs':
        if n > DENSE_LIMIT:
            raise ValueError(
                f"the dense BFGS update is limited to {DENSE_LIMIT} unknowns, got {n}; use method='lbfgs'"
            )
        model = _DenseInverse(n)
    else:
        model = _LimitedMemory(options.memory)

    f = f_counted(x)
    g = g_counted(x)
    old_old_f = f + np.linalg.norm(g) / 2
    history = [f]
    reason = 'iteration limit'
    iterations = 0

    def search(p):
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', LineSearchWarning)
            return line_search(
                f_counted, g_counted, x, p, g, f, old_old_f,
                c1=options.c1, c2=options.c2, maxiter=options.line_search_iterations
            )

    while True:
        gnorm = float(np.linalg.norm(g))
        if not np.isfinite(f) or not np.isfinite(gnorm):
            reason = 'non-finite values'
            logger.warning("optimizer stopped: non-finite objective or gradient")
            break
        if gnorm <= options.gradient_tolerance * max(1.0, abs(f)):
            reason = 'gradient tolerance'
            break
        if iterations >= options.max_iterations:
            logger.warning("optimizer reached the iteration limit (%d)", options.max_iterations)
            break

        p = model.direction(g)
        if not np.dot(p, g) < 0:
            model.reset()
            p = -g
        alpha, _, _, f_new, _, g_new = search(p)
        if alpha is None and not model.empty:
            logger.debug("line search failed, restarting along steepest descent")
            model.reset()
            p = -g
            alpha, _, _, f_new, _, g_new = search(p)
        if alpha is None:
            reason = 'line-search breakdown'
            logger.warning("optimizer stopped: line-search breakdown at iteration %d", iterations)
            break

        s = alpha * p
        x_new = x + s
        if g_new is None:
            g_new = g_counted(x_new)
        g_new = np.asarray(g_new, dtype=float)
        y = g_new - g
        sy = float(np.dot(s, y))
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            model.update(s, y)

        decrease = f - f_new
        old_old_f = f
        x, f, g = x_new, float(f_new), g_new
        history.append(f)
        iterations += 1
        logger.debug(
            "iteration %d: f = %.12e, |g| = %.3e, step = %.3e",
            iterations, f, np.linalg.norm(g), alpha
        )
        if decrease <= options.objective_tolerance * max(1.0, abs(old_old_f), abs(f)):
            reason = 'objective stalled'
            break

    report = OptimReport(
        iterations=iterations,
        objective=f,
        gradient_norm=float(np.linalg.norm(g)),
        reason=reason,
        history=history,
        function_evaluations=counts['f'],
        gradient_evaluations=counts['g']
    )
    logger.debug(
        "optimizer finished after %d iterations (%s): f = %.12e",
        iterations, reason, f
    )
    return x, report
