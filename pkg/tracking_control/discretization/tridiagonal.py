from __future__ import annotations
import numpy as np
from tracking_control.errors import NumericalError


class TridiagonalMatrix:
    """Square tridiagonal matrix stored by its three diagonals.

    `lower[i]` holds A[i+1, i], `main[i]` holds A[i, i] and `upper[i]` holds
    A[i, i+1].
    """
    def __init__(self, lower, main, upper) -> None:
        """Creates a `TridiagonalMatrix`.

        Parameters
        ----------
        lower:
            Sub-diagonal (n - 1 values).
        main:
            Main diagonal (n values).
        upper:
            Super-diagonal (n - 1 values).
        """
        self.main = np.array(main, dtype=float)
        self.lower = np.array(lower, dtype=float)
        self.upper = np.array(upper, dtype=float)
        n = self.main.size
        if self.main.ndim != 1 or n < 1:
            raise ValueError("the main diagonal must be a non-empty 1D array")
        if self.lower.shape != (n - 1,) or self.upper.shape != (n - 1,):
            raise ValueError(
                f"off-diagonals must hold {n - 1} values, got "
                f"{self.lower.size} (lower) and {self.upper.size} (upper)"
            )

    @property
    def size(self) -> int:
        return self.main.size

    def __repr__(self) -> str:
        return f"TridiagonalMatrix(size={self.size})"

    def __add__(self, other: TridiagonalMatrix) -> TridiagonalMatrix:
        if not isinstance(other, TridiagonalMatrix):
            return NotImplemented
        if other.size != self.size:
            raise ValueError(f"cannot add matrices of size {self.size} and {other.size}")
        return TridiagonalMatrix(
            self.lower + other.lower,
            self.main + other.main,
            self.upper + other.upper
        )

    def __mul__(self, factor: float) -> TridiagonalMatrix:
        return TridiagonalMatrix(factor * self.lower, factor * self.main, factor * self.upper)

    __rmul__ = __mul__

    def __truediv__(self, divisor: float) -> TridiagonalMatrix:
        return self * (1.0 / divisor)

    def entry(self, i: int, j: int) -> float:
        """Returns A[i, j] (zero outside the three diagonals)."""
        if i == j:
            return float(self.main[i])
        if i == j + 1:
            return float(self.lower[j])
        if j == i + 1:
            return float(self.upper[i])
        return 0.0

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Returns the product A @ v."""
        v = np.asarray(v, dtype=float)
        out = self.main * v
        out[1:] += self.lower * v[:-1]
        out[:-1] += self.upper * v[1:]
        return out

    def to_dense(self) -> np.ndarray:
        return (
            np.diag(self.main)
            + np.diag(self.lower, -1)
            + np.diag(self.upper, 1)
        )

    def transpose(self) -> TridiagonalMatrix:
        return TridiagonalMatrix(self.upper, self.main, self.lower)

    @property
    def T(self) -> TridiagonalMatrix:
        return self.transpose()

    def window(self, lo: int, hi: int) -> TridiagonalMatrix:
        """Returns the block of rows and columns strictly between the indices
        `lo` and `hi` (i.e. lo + 1, ..., hi - 1).

        Applied to a matrix assembled on all nodes, `window(0, N_e)` is the
        restriction to the interior nodes and `window(lo, hi)` the matrix of a
        Dirichlet problem on the node window [x_lo, x_hi].
        """
        if lo < -1 or hi > self.size or hi - lo < 2:
            raise ValueError(f"invalid window ({lo}, {hi}) for a matrix of size {self.size}")
        return TridiagonalMatrix(
            self.lower[lo + 1:hi - 1],
            self.main[lo + 1:hi],
            self.upper[lo + 1:hi - 1]
        )

    def factor(self) -> ThomasFactorization:
        return ThomasFactorization(self)


class ThomasFactorization:
    """LU factorization of a `TridiagonalMatrix` without pivoting (Thomas
    algorithm). The matrices of this package are diagonally dominant up to
    the convection terms, so no pivoting is needed; a vanishing pivot raises
    `NumericalError`.

    The factors are stored as Python lists: the sweeps are scalar recurrences
    and run faster on lists than on numpy element access.
    """
    def __init__(self, matrix: TridiagonalMatrix) -> None:
        n = matrix.size
        lower = matrix.lower.tolist()
        main = matrix.main.tolist()
        upper = matrix.upper.tolist()
        pivots = [0.0] * n
        ratios = [0.0] * max(n - 1, 0)
        pivot = main[0]
        for i in range(n):
            if i > 0:
                pivot = main[i] - lower[i - 1] * ratios[i - 1]
            if pivot == 0.0 or not np.isfinite(pivot):
                raise NumericalError(f"zero pivot in row {i} of the tridiagonal system")
            pivots[i] = pivot
            if i < n - 1:
                ratios[i] = upper[i] / pivot
        self.size = n
        self._lower = lower
        self._pivots = pivots
        self._ratios = ratios

    def solve(self, rhs) -> np.ndarray:
        """Solves A x = `rhs`."""
        n = self.size
        r = rhs.tolist() if isinstance(rhs, np.ndarray) else list(rhs)
        if len(r) != n:
            raise ValueError(f"right-hand side must hold {n} values, got {len(r)}")
        lower, pivots, ratios = self._lower, self._pivots, self._ratios
        g = [0.0] * n
        prev = 0.0
        for i in range(n):
            if i > 0:
                prev = (r[i] - lower[i - 1] * prev) / pivots[i]
            else:
                prev = r[0] / pivots[0]
            g[i] = prev
        x = g
        for i in range(n - 2, -1, -1):
            x[i] = g[i] - ratios[i] * x[i + 1]
        return np.array(x)
