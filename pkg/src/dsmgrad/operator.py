"""Monotone operators on grid functions and the Wiener-type filtering model.

The model problem is

    F(u)(x) = int_0^1 exp(-|x - y|) u(y) dy + u(x)**3 / 6,

discretized with the trapezoidal rule.  Its exact solution for the
right-hand side ``13/6 - exp(-x) - exp(x - 1)`` is ``u = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, DivergenceError, ParameterError
from .hilbert import Grid, GridFunction, norm

__all__ = [
    "OperatorBounds",
    "MonotoneProblem",
    "weighted_operator_norm",
    "wiener_problem",
    "wiener_kernel_matrix",
    "wiener_exact_rhs",
    "residual",
    "TARGETS",
]

ArrayMap = Callable[[np.ndarray], np.ndarray]
ArrayMap2 = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OperatorBounds:
    """Derivative bounds ``sup ||F^(j)(u)|| <= M_j`` over a working ball.

    ``R`` is the ball radius.  For the Wiener problem the cubic term is
    unbounded on L2 balls, so ``R`` is interpreted as a sup-norm radius
    (``max |u| <= R``).
    """

    M1: float
    M2: float
    R: float

    def __post_init__(self):
        if not (self.M1 >= 0 and self.M2 >= 0 and self.R > 0):
            raise ParameterError(f"invalid bounds M1={self.M1}, M2={self.M2}, R={self.R}")

    @property
    def c0(self) -> float:
        return 0.5 * self.M2

    def drift_c1(self, y_norm: float, C: float) -> float:
        """``||y|| (1 + 1/(C - 1))`` for the discrepancy constant ``C > 1``."""
        if C <= 1:
            raise ParameterError(f"discrepancy constant C must exceed 1, got {C}")
        return y_norm * (1.0 + 1.0 / (C - 1.0))


@dataclass(frozen=True)
class MonotoneProblem:
    """A monotone operator equation ``F(u) = f`` on a fixed grid.

    The array-level callables (``forward``, ``derivative``,
    ``adjoint_derivative``, ``jacobian``) act on raw nodal vectors and are
    what the solvers use in their inner loops.  The ``*_apply`` methods are
    the GridFunction-level surface.

    If ``adjoint_derivative`` is omitted it is formed from ``jacobian`` as
    ``W^-1 J^T W``, the adjoint in the weighted inner product.
    """

    grid: Grid
    forward: ArrayMap
    derivative: ArrayMap2
    bounds: OperatorBounds
    adjoint_derivative: Optional[ArrayMap2] = None
    jacobian: Optional[ArrayMap] = None
    rhs_exact: Optional[GridFunction] = None
    exact_solution: Optional[GridFunction] = None
    name: str = "custom"
    extras: dict = field(default_factory=dict, compare=False, repr=False)

    def _values(self, u: GridFunction) -> np.ndarray:
        if u.grid != self.grid:
            raise DimensionError(
                f"grid mismatch: problem has {self.grid.n_points} points, "
                f"argument has {u.grid.n_points}"
            )
        return u.values

    def apply(self, u: GridFunction) -> GridFunction:
        return GridFunction(self.grid, self.forward(self._values(u)))

    def derivative_apply(self, u: GridFunction, h: GridFunction) -> GridFunction:
        return GridFunction(self.grid, self.derivative(self._values(u), self._values(h)))

    def adjoint_derivative_apply(self, u: GridFunction, h: GridFunction) -> GridFunction:
        return GridFunction(self.grid, self.adjoint_array(self._values(u), self._values(h)))

    def adjoint_array(self, u: np.ndarray, g: np.ndarray) -> np.ndarray:
        if self.adjoint_derivative is not None:
            return self.adjoint_derivative(u, g)
        w = self.grid.weights
        return self.jacobian_matrix(u).T @ (w * g) / w

    def jacobian_matrix(self, u: np.ndarray) -> np.ndarray:
        """Dense matrix of ``F'(u)`` acting on nodal vectors."""
        if self.jacobian is not None:
            return self.jacobian(u)
        n = self.grid.n_points
        eye = np.eye(n)
        return np.column_stack([self.derivative(u, eye[:, j]) for j in range(n)])


def residual(problem: MonotoneProblem, u: GridFunction, f_delta: GridFunction) -> float:
    """Data misfit ``||F(u) - f_delta||`` in the weighted norm."""
    return norm(problem.apply(u) - f_delta)


def wiener_kernel_matrix(grid: Grid) -> np.ndarray:
    """Quadrature matrix ``K[i, j] = w_j exp(-|x_i - x_j|)``."""
    x = grid.nodes
    K = np.exp(-np.abs(x[:, None] - x[None, :])) * grid.weights[None, :]
    K.setflags(write=False)
    return K


def wiener_exact_rhs(x):
    """Right-hand side for the exact solution ``u = 1``."""
    x = np.asarray(x, dtype=float)
    return 13.0 / 6.0 - np.exp(-x) - np.exp(x - 1.0)


def weighted_operator_norm(matrix: np.ndarray, weights: np.ndarray, tol=1e-12, maxiter=1000, seed=0) -> float:
    """Norm of ``matrix`` as an operator on the weighted space, by power iteration.

    Iterates ``v <- M* M v`` with the weighted adjoint ``M* = W^-1 M^T W``.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(matrix.shape[1])
    v /= math.sqrt(np.dot(weights * v, v))
    estimate = 0.0
    for _ in range(maxiter):
        mv = matrix @ v
        v_new = matrix.T @ (weights * mv) / weights
        lam = math.sqrt(np.dot(weights * v_new, v_new))
        if lam == 0.0:
            return 0.0
        v = v_new / lam
        if abs(lam - estimate) <= tol * lam:
            estimate = lam
            break
        estimate = lam
    return math.sqrt(estimate)


def _sin_pi(x):
    return np.sin(np.pi * x)


def _sin_2pi(x):
    return np.sin(2.0 * np.pi * x)


def _one(x):
    return np.ones_like(np.asarray(x, dtype=float))


TARGETS = {"one": _one, "sin-pi": _sin_pi, "sin-2pi": _sin_2pi}


def _make_wiener_arrays(K, cubic_sign):
    Kt = np.ascontiguousarray(K.T)
    coef = cubic_sign / 6.0
    dcoef = cubic_sign / 2.0

    def forward(u):
        with np.errstate(over="ignore", invalid="ignore"):
            out = K @ u + coef * u**3
        if not np.all(np.isfinite(out)):
            raise DivergenceError("F(u) is not finite")
        return out

    def derivative(u, h):
        return dcoef * u * u * h + K @ h

    return Kt, forward, derivative


def wiener_problem(
    n_points: int = 100,
    target: Optional[str] = "one",
    radius: float = 2.0,
    refine: int = 4,
    cubic_sign: float = 1.0,
) -> MonotoneProblem:
    """Build the Wiener-type filtering problem on ``n_points`` nodes.

    Parameters
    ----------
    n_points : int
        Number of grid nodes (the experiments use 100).
    target : {"one", "sin-pi", "sin-2pi"} or None
        Exact solution.  For ``"one"`` the closed-form right-hand side is
        used; for the sine targets ``f`` is computed by applying the
        operator on a grid ``refine`` times finer and restricting to the
        coarse nodes.  ``None`` builds the operator without data.
    radius : float
        Sup-norm radius of the working ball used for ``M1`` and ``M2``.
    cubic_sign : float
        Sign of the cubic term.  ``-1`` gives a deliberately non-monotone
        operator, used to exercise the monotonicity oracle.
    """
    grid = Grid(n_points)
    K = wiener_kernel_matrix(grid)
    w = grid.weights
    Kt, forward, derivative = _make_wiener_arrays(K, cubic_sign)
    dcoef = cubic_sign / 2.0

    def adjoint_derivative(u, g):
        # W^-1 K^T W g; the multiplier part is real and diagonal.
        return Kt @ (w * g) / w + dcoef * u * u * g

    def jacobian(u):
        J = K.copy()
        J[np.diag_indices_from(J)] += dcoef * u * u
        return J

    k_norm = weighted_operator_norm(K, w)
    bounds = OperatorBounds(M1=k_norm + 0.5 * radius**2, M2=radius, R=radius)

    rhs = exact = None
    if target is not None:
        if target not in TARGETS:
            raise ParameterError(f"unknown target {target!r}; choose from {sorted(TARGETS)}")
        exact = grid.function(TARGETS[target])
        if target == "one" and cubic_sign == 1.0:
            rhs = grid.function(wiener_exact_rhs)
        else:
            fine = Grid(refine * (n_points - 1) + 1)
            Kf = wiener_kernel_matrix(fine)
            yf = TARGETS[target](fine.nodes)
            rhs = GridFunction(grid, (Kf @ yf + cubic_sign / 6.0 * yf**3)[::refine])

    name = "wiener" if cubic_sign == 1.0 else "wiener-anti"
    return MonotoneProblem(
        grid=grid,
        forward=forward,
        derivative=derivative,
        adjoint_derivative=adjoint_derivative,
        jacobian=jacobian,
        bounds=bounds,
        rhs_exact=rhs,
        exact_solution=exact,
        name=name,
        extras={"kernel_matrix": K, "kernel_norm": k_norm, "target": target},
    )
