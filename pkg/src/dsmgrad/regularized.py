"""The regularized equation ``F(V) + a V = f_delta`` and diagnostics built on it.

For monotone ``F`` and ``a > 0`` this equation is uniquely solvable, and its
solution ``V(a)`` is the object the discrepancy principle is reasoned about:
``phi(a) = ||F(V) - f_delta|| = a ||V||`` increases with ``a`` while
``psi(a) = ||V||`` decreases.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import BracketError, NoCrossingError, ParameterError, SolverFailure
from .hilbert import GridFunction, norm
from .operator import MonotoneProblem

log = logging.getLogger(__name__)

__all__ = [
    "RegularizedSolution",
    "solve_regularized",
    "phi_psi_curve",
    "find_discrepancy_crossing",
    "perturbation_bound_check",
]


@dataclass(frozen=True)
class RegularizedSolution:
    a: float
    V: GridFunction
    residual_norm: float
    newton_iterations: int
    phi: float
    psi: float


def _wnorm(w, v):
    return math.sqrt(float(np.dot(w * v, v)))


def solve_regularized(
    problem: MonotoneProblem,
    a: float,
    f_delta: GridFunction,
    tol: float = 1e-10,
    initial: Optional[GridFunction] = None,
    max_iterations: int = 200,
    max_halvings: int = 60,
) -> RegularizedSolution:
    """Solve ``F(V) + a V = f_delta`` by damped Newton.

    The Jacobian ``F'(V) + a I`` is positive definite for monotone ``F``, so
    each step is a dense LU solve.  The step is halved until the residual
    norm decreases.  Starts from ``V = 0`` unless ``initial`` is given.

    Raises
    ------
    ParameterError
        If ``a <= 0`` or ``tol <= 0``.
    SolverFailure
        If the residual is not below ``tol`` after ``max_iterations``
        Newton steps, or no step length decreases it.
    """
    if not a > 0:
        raise ParameterError(f"regularization parameter must be positive, got {a}")
    if not tol > 0:
        raise ParameterError(f"tolerance must be positive, got {tol}")
    w = problem.grid.weights
    fd = problem._values(f_delta)
    v = np.zeros_like(fd) if initial is None else problem._values(initial).copy()
    eye = np.eye(v.size)

    def G(x):
        return problem.forward(x) + a * x - fd

    g = G(v)
    gnorm = _wnorm(w, g)
    it = 0
    while gnorm > tol:
        if it >= max_iterations:
            raise SolverFailure(
                f"Newton did not converge for a={a:g}: residual {gnorm:.3e} after {it} steps",
                last_iterate=GridFunction(problem.grid, v),
                a=a,
            )
        J = problem.jacobian_matrix(v) + a * eye
        try:
            step = scipy.linalg.solve(J, g, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SolverFailure(f"singular Jacobian at a={a:g}", GridFunction(problem.grid, v), a) from exc
        t = 1.0
        for _ in range(max_halvings):
            trial = v - t * step
            if np.all(np.isfinite(trial)):
                g_trial = G(trial)
                n_trial = _wnorm(w, g_trial)
                if n_trial < gnorm:
                    break
            t *= 0.5
        else:
            raise SolverFailure(
                f"line search failed for a={a:g} at residual {gnorm:.3e}",
                last_iterate=GridFunction(problem.grid, v),
                a=a,
            )
        v, g, gnorm = trial, g_trial, n_trial
        it += 1

    V = GridFunction(problem.grid, v)
    psi = _wnorm(w, v)
    phi = _wnorm(w, problem.forward(v) - fd)
    return RegularizedSolution(a=a, V=V, residual_norm=gnorm, newton_iterations=it, phi=phi, psi=psi)


def phi_psi_curve(
    problem: MonotoneProblem,
    f_delta: GridFunction,
    a_grid: Sequence[float],
    tol: float = 1e-10,
) -> list[tuple[float, float, float]]:
    """Sample ``(a, phi, psi)`` along a strictly decreasing grid of ``a``.

    Each solve is warm-started from the previous ``V``.
    """
    a_grid = [float(a) for a in a_grid]
    if any(a <= 0 for a in a_grid):
        raise ParameterError("a_grid must be positive")
    if any(a1 <= a2 for a1, a2 in zip(a_grid, a_grid[1:])):
        raise ParameterError("a_grid must be strictly decreasing")
    out = []
    V = None
    for a in a_grid:
        sol = solve_regularized(problem, a, f_delta, tol, initial=V)
        V = sol.V
        out.append((a, sol.phi, sol.psi))
    return out


def find_discrepancy_crossing(
    problem: MonotoneProblem,
    f_delta: GridFunction,
    C: float,
    delta: float,
    a_bracket: tuple[float, float],
    tol: float = 1e-10,
    max_bisections: int = 200,
) -> float:
    """Find ``a*`` with ``||F(V(a*)) - f_delta|| = C delta`` by bisection in ``log a``.

    ``phi`` is increasing in ``a``, so the crossing inside a straddling
    bracket is unique.
    """
    if C <= 1:
        raise ParameterError(f"C must exceed 1, got {C}")
    if delta <= 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    a_lo, a_hi = sorted(float(a) for a in a_bracket)
    if a_lo <= 0:
        raise ParameterError("bracket endpoints must be positive")
    target = C * delta
    f0 = norm(problem.apply(problem.grid.zeros()) - f_delta)
    if f0 <= target:
        raise NoCrossingError(
            f"||F(0) - f_delta|| = {f0:.6g} <= C*delta = {target:.6g}; data already compatible"
        )
    hi = solve_regularized(problem, a_hi, f_delta, tol)
    lo = solve_regularized(problem, a_lo, f_delta, tol, initial=hi.V)
    if not (hi.phi > target > lo.phi):
        raise BracketError(
            f"bracket [{a_lo:g}, {a_hi:g}] gives phi in [{lo.phi:.6g}, {hi.phi:.6g}], "
            f"which does not straddle {target:.6g}"
        )
    accept = max(tol, 1e-8 * target)
    log_lo, log_hi = math.log(a_lo), math.log(a_hi)
    V = hi.V
    for _ in range(max_bisections):
        mid = math.exp(0.5 * (log_lo + log_hi))
        sol = solve_regularized(problem, mid, f_delta, tol, initial=V)
        V = sol.V
        if abs(sol.phi - target) <= accept:
            return mid
        if sol.phi > target:
            log_hi = math.log(mid)
        else:
            log_lo = math.log(mid)
    raise SolverFailure(f"bisection for the discrepancy crossing did not reach {accept:.3e}", V, mid)


def perturbation_bound_check(
    problem: MonotoneProblem,
    f: GridFunction,
    f_delta: GridFunction,
    a: float,
    tol: float = 1e-10,
) -> tuple[float, float]:
    """Return ``(||V_delta - V||, ||f_delta - f|| / a)``.

    Monotonicity gives ``lhs <= rhs``; the caller decides the slack.
    """
    if not a > 0:
        raise ParameterError(f"a must be positive, got {a}")
    exact = solve_regularized(problem, a, f, tol)
    noisy = solve_regularized(problem, a, f_delta, tol, initial=exact.V)
    return norm(noisy.V - exact.V), norm(f_delta - f) / a
