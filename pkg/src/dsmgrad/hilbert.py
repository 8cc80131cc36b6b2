"""Uniform grids on [0, 1] and the trapezoidal L2 inner product.

Grid functions are thin immutable wrappers around a numpy vector.  All
inner products are quadrature-weighted so that discrete adjoints and norms
agree with the continuous L2[0, 1] structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionError, ParameterError

__all__ = ["Grid", "GridFunction", "inner_product", "norm"]


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``x_i = i/(n-1)`` with trapezoidal weights."""

    n_points: int

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ParameterError(f"n_points must be an integer >= 2, got {self.n_points!r}")

    @property
    def spacing(self) -> float:
        return 1.0 / (self.n_points - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.arange(self.n_points, dtype=float) * self.spacing
        x[-1] = 1.0
        x.setflags(write=False)
        return x

    @cached_property
    def weights(self) -> np.ndarray:
        h = self.spacing
        w = np.full(self.n_points, h)
        w[0] = w[-1] = 0.5 * h
        w.setflags(write=False)
        return w

    def function(self, values) -> GridFunction:
        """Wrap nodal values (array or callable of x) as a GridFunction."""
        if callable(values):
            values = values(self.nodes)
        return GridFunction(self, values)

    def constant(self, value: float) -> GridFunction:
        return GridFunction(self, np.full(self.n_points, float(value)))

    def zeros(self) -> GridFunction:
        return self.constant(0.0)


class GridFunction:
    """Real function sampled at the nodes of a :class:`Grid`.

    Supports the vector-space operations (``u + v``, ``u - v``, ``2 * u``)
    and nodewise products.  Values are copied on construction and stored
    read-only.
    """

    __slots__ = ("grid", "values")
    __array_priority__ = 100

    def __init__(self, grid: Grid, values):
        arr = np.array(values, dtype=float)
        if arr.ndim == 0:
            arr = np.full(grid.n_points, float(arr))
        if arr.shape != (grid.n_points,):
            raise DimensionError(
                f"expected {grid.n_points} values, got array of shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ParameterError("grid function values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    def __reduce__(self):
        return (GridFunction, (self.grid, np.array(self.values)))

    def __repr__(self):
        return f"GridFunction(n_points={self.grid.n_points}, norm={norm(self):.6g})"

    def __len__(self):
        return self.grid.n_points

    def _other(self, other):
        if isinstance(other, GridFunction):
            _check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __pow__(self, p):
        return GridFunction(self.grid, self.values**p)


def _check_same_grid(u: GridFunction, v: GridFunction) -> None:
    if u.grid != v.grid:
        raise DimensionError(
            f"grid mismatch: {u.grid.n_points} vs {v.grid.n_points} points"
        )


def inner_product(u: GridFunction, v: GridFunction) -> float:
    """Trapezoidal approximation of the L2[0, 1] inner product."""
    _check_same_grid(u, v)
    return float(np.dot(u.grid.weights * u.values, v.values))


def norm(u: GridFunction) -> float:
    return float(np.sqrt(max(inner_product(u, u), 0.0)))
