"""Gradient (DSMG) and Newton-type (DSMN) solution processes with discrepancy stopping.

All three processes stop at the first state whose data misfit
``||F(u) - f_delta||`` is at most ``C1 * delta**zeta``.

* :func:`dsmg_iterate` -- ``u <- u - alpha_n A_n^* (F(u) + a_n u - f_delta)``
  with ``A_n = F'(u_n) + a_n I``.  Only operator applications, no linear
  solves.
* :func:`dsmg_flow` -- the continuous version of the same update, integrated
  with fixed-step RK4.
* :func:`dsmn_iterate` -- ``u <- u - A_n^-1 (F(u) + a_n u - f_delta)`` with a
  dense solve per step; the baseline.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import DivergenceError, ParameterError
from .hilbert import GridFunction, norm
from .operator import MonotoneProblem
from .regularized import solve_regularized
from .schedule import PowerSchedule, StepSizePolicy, validate_continuous

log = logging.getLogger(__name__)

__all__ = [
    "StopRule",
    "SolveReport",
    "dsmg_iterate",
    "dsmg_flow",
    "dsmn_iterate",
    "check_initial_condition",
    "gap_diagnostic",
    "GapDiagnostic",
]


@dataclass(frozen=True)
class StopRule:
    """Discrepancy principle ``||F(u) - f_delta|| <= C1 * delta**zeta``."""

    C1: float = 1.01
    zeta: float = 0.99
    delta: float = 1.0
    max_iterations: int = 200_000

    def __post_init__(self):
        if not self.C1 > 1:
            raise ParameterError(f"C1 must exceed 1, got {self.C1}")
        if not 0 < self.zeta <= 1:
            raise ParameterError(f"zeta must lie in (0, 1], got {self.zeta}")
        if not self.delta > 0:
            raise ParameterError(
                f"noise level must be positive for discrepancy stopping, got {self.delta}; "
                "exact-data runs need an iteration cap instead"
            )
        if self.max_iterations < 0:
            raise ParameterError("max_iterations must be nonnegative")

    @property
    def threshold(self) -> float:
        return self.C1 * self.delta**self.zeta


@dataclass
class SolveReport:
    method: str
    final: GridFunction
    residual_history: list[float]
    a_history: list[float]
    n_delta: int
    stopped_by: str
    threshold: float
    iterates_kept: list[tuple[int, GridFunction]] = field(default_factory=list, repr=False)
    t_delta: Optional[float] = None
    time_history: Optional[list[float]] = None
    error_vs_y: Optional[float] = None
    relative_error: Optional[float] = None
    alpha_clipped: int = 0
    wall_time: float = 0.0
    warnings: list[str] = field(default_factory=list)

    @property
    def residual_at_stop(self) -> float:
        return self.residual_history[-1]


class _Keeper:
    """Keeps a thinned subsequence of iterates (at most ``2 * limit`` entries)."""

    def __init__(self, enabled=True, limit=50):
        self.enabled = enabled
        self.limit = limit
        self.stride = 1
        self.items = []

    def add(self, n, u, grid):
        if not self.enabled or n % self.stride:
            return
        self.items.append((n, GridFunction(grid, u)))
        if len(self.items) > 2 * self.limit:
            self.stride *= 2
            self.items = [it for it in self.items if it[0] % self.stride == 0]

    def finish(self, n, u, grid):
        if self.enabled and (not self.items or self.items[-1][0] != n):
            self.items.append((n, GridFunction(grid, u)))
        return self.items


def _wnorm(w, v):
    return math.sqrt(float(np.dot(w * v, v)))


def _initial(problem, u0):
    if u0 is None:
        return np.zeros(problem.grid.n_points)
    return problem._values(u0).copy()


def _forward(problem, u, residuals):
    try:
        return problem.forward(u)
    except DivergenceError as exc:
        raise DivergenceError(str(exc), residuals) from exc


def _finish(report, problem):
    y = problem.exact_solution
    if y is not None:
        report.error_vs_y = norm(report.final - y)
        ynorm = norm(y)
        report.relative_error = report.error_vs_y / ynorm if ynorm > 0 else None
    hist = report.residual_history
    if report.method.startswith("dsmg") and any(b > a * (1 + 1e-12) for a, b in zip(hist[3:], hist[4:])):
        msg = "residual history is not monotone after the first iterations"
        log.warning(msg)
        report.warnings.append(msg)
    return report


def dsmg_iterate(
    problem: MonotoneProblem,
    f_delta: GridFunction,
    schedule: PowerSchedule,
    steps: StepSizePolicy,
    stop: StopRule,
    u0: Optional[GridFunction] = None,
    keep_iterates: bool = True,
) -> SolveReport:
    """Gradient iteration with a priori regularization schedule ``a_n = schedule.a_n(n)``.

    Each step costs one application of ``F`` and one of ``F'(u)^*``; no
    linear system is solved.

    Raises
    ------
    DivergenceError
        If an iterate stops being finite.
    """
    start = time.perf_counter()
    grid = problem.grid
    w = grid.weights
    fd = problem._values(f_delta)
    u = _initial(problem, u0)
    thr = stop.threshold
    M1 = problem.bounds.M1
    keeper = _Keeper(keep_iterates)
    residuals, a_hist = [], []
    clipped = 0
    n = 0
    while True:
        Fu = _forward(problem, u, residuals)
        res = _wnorm(w, Fu - fd)
        residuals.append(res)
        keeper.add(n, u, grid)
        if res <= thr:
            stopped_by = "discrepancy"
            break
        if n >= stop.max_iterations:
            stopped_by = "max_iterations"
            break
        a = schedule.a_n(n)
        r = Fu + a * u - fd
        alpha, was_clipped = steps.step(a, M1)
        clipped += was_clipped
        u = u - alpha * (problem.adjoint_array(u, r) + a * r)
        a_hist.append(a)
        n += 1
        if not np.all(np.isfinite(u)):
            raise DivergenceError(f"DSMG iterate {n} is not finite", residuals)

    if clipped:
        log.info("step size clipped to the admissible band in %d of %d steps", clipped, n)
    report = SolveReport(
        method="dsmg",
        final=GridFunction(grid, u),
        residual_history=residuals,
        a_history=a_hist,
        n_delta=n,
        stopped_by=stopped_by,
        threshold=thr,
        iterates_kept=keeper.finish(n, u, grid),
        alpha_clipped=clipped,
        wall_time=time.perf_counter() - start,
    )
    return _finish(report, problem)


def dsmn_iterate(
    problem: MonotoneProblem,
    f_delta: GridFunction,
    a0: float,
    stop: StopRule,
    u0: Optional[GridFunction] = None,
    b: float = 1.0,
    keep_iterates: bool = True,
) -> SolveReport:
    """Newton-type iteration with ``a_n = a0 / (1 + n)**b`` (``b = 1`` by default)."""
    if not a0 > 0:
        raise ParameterError(f"a0 must be positive, got {a0}")
    start = time.perf_counter()
    grid = problem.grid
    w = grid.weights
    fd = problem._values(f_delta)
    u = _initial(problem, u0)
    eye = np.eye(u.size)
    thr = stop.threshold
    keeper = _Keeper(keep_iterates)
    residuals, a_hist = [], []
    n = 0
    while True:
        Fu = _forward(problem, u, residuals)
        res = _wnorm(w, Fu - fd)
        residuals.append(res)
        keeper.add(n, u, grid)
        if res <= thr:
            stopped_by = "discrepancy"
            break
        if n >= stop.max_iterations:
            stopped_by = "max_iterations"
            break
        a = a0 / (1.0 + n) ** b
        J = problem.jacobian_matrix(u) + a * eye
        try:
            step = scipy.linalg.solve(J, Fu + a * u - fd, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise DivergenceError(f"singular Newton system at step {n}", residuals) from exc
        u = u - step
        a_hist.append(a)
        n += 1
        if not np.all(np.isfinite(u)):
            raise DivergenceError(f"DSMN iterate {n} is not finite", residuals)

    report = SolveReport(
        method="dsmn",
        final=GridFunction(grid, u),
        residual_history=residuals,
        a_history=a_hist,
        n_delta=n,
        stopped_by=stopped_by,
        threshold=thr,
        iterates_kept=keeper.finish(n, u, grid),
        wall_time=time.perf_counter() - start,
    )
    return _finish(report, problem)


def dsmg_flow(
    problem: MonotoneProblem,
    f_delta: GridFunction,
    schedule: PowerSchedule,
    stop: StopRule,
    u0: Optional[GridFunction] = None,
    dt: float = 0.1,
    t_max: float = 1.0e4,
    require_admissible: bool = False,
    keep_iterates: bool = True,
) -> SolveReport:
    """Integrate ``u' = -A_a(t)^* (F(u) + a(t) u - f_delta)`` with fixed-step RK4.

    The misfit is monitored after every step.  On the first step that
    reaches the threshold, the stopping time is refined by bisection on the
    length of a partial RK4 step from the start of that step, until the
    misfit is within ``1e-6`` relative of the threshold.

    The practical schedules ``a0 = C0 * delta**zeta`` do not satisfy the
    rate condition of :func:`~dsmgrad.schedule.validate_continuous`;
    admissibility is only enforced with ``require_admissible=True`` and
    logged otherwise.
    """
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    check = validate_continuous(schedule)
    if not check.valid:
        if require_admissible:
            raise ParameterError(f"schedule is not admissible: {check.failed}")
        log.info("flow schedule fails %s; running anyway", check.failed)

    start = time.perf_counter()
    grid = problem.grid
    w = grid.weights
    fd = problem._values(f_delta)
    thr = stop.threshold
    residuals = []

    def velocity(t, v):
        a = schedule.a(t)
        r = _forward(problem, v, residuals) + a * v - fd
        return -(problem.adjoint_array(v, r) + a * r)

    def rk4(t, v, h):
        k1 = velocity(t, v)
        k2 = velocity(t + 0.5 * h, v + 0.5 * h * k1)
        k3 = velocity(t + 0.5 * h, v + 0.5 * h * k2)
        k4 = velocity(t + h, v + h * k3)
        return v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def misfit(v):
        return _wnorm(w, _forward(problem, v, residuals) - fd)

    u = _initial(problem, u0)
    t = 0.0
    keeper = _Keeper(keep_iterates)
    residuals.append(misfit(u))
    a_hist, times = [], [0.0]
    keeper.add(0, u, grid)
    n = 0
    stopped_by = "discrepancy"
    t_delta = 0.0
    while residuals[-1] > thr:
        if t >= t_max or n >= stop.max_iterations:
            stopped_by = "max_time"
            t_delta = None
            break
        h = min(dt, t_max - t)
        u_new = rk4(t, u, h)
        if not np.all(np.isfinite(u_new)):
            raise DivergenceError(f"flow state not finite at t={t + h:g}", residuals)
        res = misfit(u_new)
        n += 1
        a_hist.append(schedule.a(t))
        if res <= thr:
            lo, hi = 0.0, h
            u_hit, res_hit = u_new, res
            for _ in range(200):
                if abs(res_hit - thr) <= 1e-6 * thr:
                    break
                mid = 0.5 * (lo + hi)
                u_mid = rk4(t, u, mid)
                r_mid = misfit(u_mid)
                if r_mid > thr:
                    lo = mid
                else:
                    hi, u_hit, res_hit = mid, u_mid, r_mid
            u_new, res = u_hit, res_hit
            t_delta = t + hi
            t = t_delta
        else:
            t += h
        u = u_new
        residuals.append(res)
        times.append(t)
        keeper.add(n, u, grid)

    report = SolveReport(
        method="dsmg-flow",
        final=GridFunction(grid, u),
        residual_history=residuals,
        a_history=a_hist,
        n_delta=n,
        stopped_by=stopped_by,
        threshold=thr,
        iterates_kept=keeper.finish(n, u, grid),
        t_delta=t_delta,
        time_history=times,
        wall_time=time.perf_counter() - start,
    )
    return _finish(report, problem)


def check_initial_condition(
    problem: MonotoneProblem,
    f_delta: GridFunction,
    a0: float,
    u0: GridFunction,
    tol: float = 1e-10,
) -> tuple[float, float, bool]:
    """Return ``(h0, a0 ||V(a0)|| / 4, ||u0 - V(a0)|| <= ||F(0) - f_delta|| / a0)``.

    ``h0 = ||F(u0) + a0 u0 - f_delta||``; the flow theory asks for
    ``h0 <= a0 ||V(a0)|| / 4``.
    """
    sol = solve_regularized(problem, a0, f_delta, tol)
    h0 = norm(problem.apply(u0) + a0 * u0 - f_delta)
    bound = 0.25 * a0 * sol.psi
    f0 = norm(problem.apply(problem.grid.zeros()) - f_delta)
    g0 = norm(u0 - sol.V)
    return h0, bound, bool(g0 <= f0 / a0 * (1 + 1e-12))


@dataclass
class GapDiagnostic:
    rows: list[tuple[int, float, float]]
    warning: bool

    @property
    def all_below(self) -> bool:
        return all(g < bound for _, g, bound in self.rows)


def gap_diagnostic(
    problem: MonotoneProblem,
    f_delta: GridFunction,
    schedule: PowerSchedule,
    report: SolveReport,
    lam: float,
    validated: bool = False,
    tol: float = 1e-10,
) -> GapDiagnostic:
    """Distance ``g_n = ||u_n - V(a_n)||`` of each kept iterate to the regularized solution.

    Compared with ``a_n**2 / lam``, which bounds it when the schedule and
    ``lam`` satisfy the full admissibility conditions.  For schedules not
    marked ``validated`` the result carries ``warning=True`` and is
    informational only.
    """
    if not report.iterates_kept:
        raise ParameterError("report has no kept iterates")
    if not validated:
        log.warning("gap diagnostic on a schedule that was not validated; bound may not apply")
    rows = []
    V = None
    for n, u in report.iterates_kept:
        a = schedule.a_n(n)
        sol = solve_regularized(problem, a, f_delta, tol, initial=V)
        V = sol.V
        rows.append((n, norm(u - sol.V), a * a / lam))
    return GapDiagnostic(rows, warning=not validated)
