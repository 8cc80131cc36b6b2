"""Regularization schedules ``a(t) = d / (c + t)**b``, step sizes, and their validators.

The validators never raise on a failed condition; they return a
:class:`ValidationReport` listing every check with its measured value so a
caller can see all violations at once.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import InternalConsistencyError, ParameterError, PreconditionError
from .operator import OperatorBounds

log = logging.getLogger(__name__)

__all__ = [
    "PowerSchedule",
    "StepSizePolicy",
    "ScheduleParams",
    "Check",
    "ValidationReport",
    "step_band_upper",
    "validate_continuous",
    "validate_discrete",
    "kappa_scale",
    "remark_construction",
    "heuristic_a0",
    "verify_integral_lemmas",
    "IntegralInequalityRow",
]


@dataclass(frozen=True)
class PowerSchedule:
    """The schedule ``a(t) = d / (c + t)**b``.

    Any positive ``d, c, b`` is representable so that out-of-range schedules
    can be reported by the validators; the gradient theory needs
    ``b in (0, 1/4]`` and ``c >= 1``.
    """

    d: float
    c: float = 1.0
    b: float = 0.25

    def __post_init__(self):
        if not (self.d > 0 and self.c > 0 and self.b > 0):
            raise ParameterError(f"schedule needs d, c, b > 0, got d={self.d}, c={self.c}, b={self.b}")

    @classmethod
    def from_a0(cls, a0: float, b: float = 0.25, c: float = 1.0) -> PowerSchedule:
        """Schedule with ``a(0) = a0``."""
        return cls(d=a0 * c**b, c=c, b=b)

    def a(self, t):
        val = self.d / (self.c + np.asarray(t, dtype=float)) ** self.b
        return float(val) if val.ndim == 0 else val

    def a_n(self, n):
        if np.any(np.asarray(n) < 0):
            raise ParameterError("n must be nonnegative")
        return self.a(n)

    def a_dot(self, t):
        val = -self.b * self.d / (self.c + np.asarray(t, dtype=float)) ** (self.b + 1.0)
        return float(val) if val.ndim == 0 else val

    @property
    def theta(self) -> float:
        return 1.0 - 2.0 * self.b

    def half_square_integral(self, t):
        """Closed form of ``int_0^t a(s)**2 / 2 ds``."""
        t = np.asarray(t, dtype=float)
        th = self.theta
        if abs(th) < 1e-14:
            val = 0.5 * self.d**2 * np.log1p(t / self.c)
        else:
            p = self.d**2 / (2.0 * th)
            # p ((c+t)^th - c^th), written to avoid cancellation at small t
            val = p * self.c**th * np.expm1(th * np.log1p(t / self.c))
        return float(val) if val.ndim == 0 else val

    def scaled(self, kappa: float) -> PowerSchedule:
        return replace(self, d=kappa * self.d)


def step_band_upper(a: float, M1: float) -> float:
    """Largest admissible gradient step ``2 / (a**2 + (M1 + a)**2)``."""
    return 2.0 / (a * a + (M1 + a) ** 2)


@dataclass(frozen=True)
class StepSizePolicy:
    """Step sizes for the gradient iteration.

    ``mode="capped"`` uses ``alpha`` when it lies in the admissible band and
    the band's upper end otherwise.  ``mode="constant"`` always returns
    ``alpha`` and only logs when it leaves the band.
    """

    alpha: float = 1.0
    mode: str = "capped"
    alpha_floor: float = 1e-8

    def __post_init__(self):
        if self.mode not in ("capped", "constant"):
            raise ParameterError(f"unknown step mode {self.mode!r}")
        if not (self.alpha > 0 and self.alpha_floor > 0):
            raise ParameterError("alpha and alpha_floor must be positive")

    def step(self, a: float, M1: float) -> tuple[float, bool]:
        """Return ``(alpha_n, clipped)``."""
        upper = step_band_upper(a, M1)
        if self.alpha <= upper:
            alpha, clipped = self.alpha, False
        elif self.mode == "capped":
            alpha, clipped = upper, True
        else:
            alpha, clipped = self.alpha, False
            log.warning("constant step %.4g exceeds the admissible bound %.4g", self.alpha, upper)
        if alpha < self.alpha_floor:
            log.warning("step %.4g is below the floor %.4g", alpha, self.alpha_floor)
        return alpha, clipped


@dataclass(frozen=True)
class ScheduleParams:
    """Constants tying a discrete schedule to the operator bounds.

    ``lam`` scales the gap bound ``a_n**2 / lam``; ``C`` is the discrepancy
    constant (``(C1 + 1) / 2`` for a stopping multiplier ``C1``).
    """

    lam: float
    a0: float
    C: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ParameterError(f"lambda must be positive, got {self.lam}")
        if not self.C > 1:
            raise ParameterError(f"C must exceed 1, got {self.C}")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    limit: float
    required: bool = True
    first_violation: Optional[int] = None
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return all(c.passed for c in self.checks if c.required)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.checks if c.required and not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __str__(self):
        lines = []
        for c in self.checks:
            flag = "ok  " if c.passed else ("FAIL" if c.required else "no  ")
            extra = f" first n={c.first_violation}" if c.first_violation is not None else ""
            lines.append(f"[{flag}] {c.name}: {c.value:.6g} vs {c.limit:.6g}{extra} {c.detail}".rstrip())
        return "\n".join(lines)


def validate_continuous(schedule: PowerSchedule) -> ValidationReport:
    """Check the admissibility conditions for the continuous gradient flow.

    Required: ``0 < b <= 1/4``, ``c >= 1`` and
    ``sup |a'| / a**3 = b / (d**2 c**(1-2b)) <= 1/4``.  The stronger premise
    ``c**(1-2b) d**2 >= 6b`` used by the integral inequality is reported as
    an optional check.
    """
    d, c, b = schedule.d, schedule.c, schedule.b
    ratio = b / (d * d * c ** (1.0 - 2.0 * b))
    premise = c ** (1.0 - 2.0 * b) * d * d
    return ValidationReport(
        [
            Check("b_range", 0.0 < b <= 0.25, b, 0.25, detail="need 0 < b <= 1/4"),
            Check("c_min", c >= 1.0, c, 1.0, detail="need c >= 1"),
            Check("rate_ratio", ratio <= 0.25, ratio, 0.25, detail="sup |a'|/a^3 <= 1/4"),
            Check("strong_premise", premise >= 6.0 * b, premise, 6.0 * b, required=False,
                  detail="c^(1-2b) d^2 >= 6b"),
        ]
    )


def _recursion_check(schedule, lam, c1, alpha_floor, n_check):
    n = np.arange(n_check + 2, dtype=float)
    a = schedule.a_n(n)
    an, an1 = a[:-1], a[1:]
    lhs = an**2 / lam - alpha_floor * an**4 / (2.0 * lam) + c1 * (an - an1) / an1
    rhs = an1**2 / lam
    slack = 1e-12 * (an**2 / lam + rhs)
    bad = np.nonzero(lhs > rhs + slack)[0]
    margin = float(np.min(rhs - lhs))
    first = int(bad[0]) if bad.size else None
    return first, margin


def validate_discrete(
    schedule: PowerSchedule,
    params: ScheduleParams,
    bounds: OperatorBounds,
    f_delta_norm_minus_F0: float,
    y_norm_est: float,
    alpha_floor: float,
    n_check: int = 10_000,
) -> ValidationReport:
    """Check the five conditions under which the gradient iteration converges.

    Parameters
    ----------
    f_delta_norm_minus_F0 : float
        ``||f_delta - F(0)||``.
    y_norm_est : float
        Estimate of the minimal-norm solution's norm.
    alpha_floor : float
        Lower bound of the step sizes.
    n_check : int
        The recursion condition is verified numerically for ``n <= n_check``.
    """
    if not (y_norm_est > 0 and alpha_floor > 0 and f_delta_norm_minus_F0 >= 0):
        raise ParameterError("y_norm_est and alpha_floor must be positive")
    a0 = float(schedule.a_n(0))
    if not math.isclose(a0, params.a0, rel_tol=1e-10):
        raise ParameterError(f"params.a0={params.a0} does not match schedule a(0)={a0}")
    lam, M1, c0 = params.lam, bounds.M1, bounds.c0
    c1 = bounds.drift_c1(y_norm_est, params.C)

    n = np.arange(n_check + 2, dtype=float)
    a = schedule.a_n(n)
    ratios = a[:-1] / a[1:]
    worst = int(np.argmax(ratios))
    ratio_bad = np.nonzero(ratios > 2.0)[0]

    first, margin = _recursion_check(schedule, lam, c1, alpha_floor, n_check)
    return ValidationReport(
        [
            Check("ratio_bound", ratio_bad.size == 0, float(ratios[worst]), 2.0,
                  first_violation=int(ratio_bad[0]) if ratio_bad.size else None,
                  detail="a_n / a_(n+1) <= 2"),
            Check("data_bound", f_delta_norm_minus_F0 <= a0**3 / lam, f_delta_norm_minus_F0, a0**3 / lam,
                  detail="||f_delta - F(0)|| <= a0^3 / lambda"),
            Check("lambda_lower", M1 / lam <= y_norm_est, M1 / lam, y_norm_est,
                  detail="M1 / lambda <= ||y||"),
            Check("nonlinearity_bound", c0 * (M1 + a0) / lam <= 0.5, c0 * (M1 + a0) / lam, 0.5,
                  detail="c0 (M1 + a0) / lambda <= 1/2"),
            Check("recursion", first is None, margin, 0.0, first_violation=first,
                  detail=f"gap recursion for n <= {n_check} (value = min margin)"),
            Check("step_band", alpha_floor <= step_band_upper(a0, M1), alpha_floor,
                  step_band_upper(a0, M1), required=False,
                  detail="alpha_floor <= 2/(a0^2 + (M1 + a0)^2)"),
        ]
    )


def kappa_scale(
    schedule: PowerSchedule,
    params: ScheduleParams,
    bounds: OperatorBounds,
    f_delta_norm_minus_F0: float,
    y_norm_est: float,
    alpha_floor: float,
    n_check: int = 10_000,
) -> tuple[PowerSchedule, ScheduleParams, float]:
    """Rescale ``a_n -> kappa a_n`` and ``lambda -> kappa**2 lambda``.

    Returns the scaled schedule, scaled parameters and ``kappa``.  When the
    base schedule already satisfies every condition ``kappa = 1``.

    Raises
    ------
    PreconditionError
        If the base pair violates the ratio, data or lambda conditions.
    InternalConsistencyError
        If the scaled pair fails re-validation.
    """
    args = (bounds, f_delta_norm_minus_F0, y_norm_est, alpha_floor, n_check)
    base = validate_discrete(schedule, params, *args)
    missing = [c for c in ("ratio_bound", "data_bound", "lambda_lower") if not base[c].passed]
    if missing:
        raise PreconditionError(f"base schedule violates {', '.join(missing)}")
    if base.valid:
        return schedule, params, 1.0

    a0, lam, c0 = params.a0, params.lam, bounds.c0
    c1 = bounds.drift_c1(y_norm_est, params.C)
    kappa = max(
        1.0,
        4.0 * c0 * a0 / lam,
        math.sqrt(4.0 / (alpha_floor * a0**2 * 2.0 * math.sqrt(2.0))),
        math.sqrt(lam * c1 / (alpha_floor * a0**4)),
    )
    new_schedule = schedule.scaled(kappa)
    new_params = ScheduleParams(lam=kappa**2 * lam, a0=kappa * a0, C=params.C)
    report = validate_discrete(new_schedule, new_params, *args)
    if not report.valid:
        raise InternalConsistencyError(
            f"kappa={kappa:.6g} scaling still fails {report.failed}; check the operator bounds\n{report}"
        )
    return new_schedule, new_params, kappa


def remark_construction(
    bounds: OperatorBounds,
    y_norm: float,
    f_norm_minus_F0: float,
    f_norm: float,
    C: float,
    b: float = 0.25,
    c: float = 1.0,
) -> tuple[PowerSchedule, ScheduleParams]:
    """Delta-independent admissible choice ``lambda = M1 (1/||y|| + 4 c0)``,
    ``a0 = (lambda (||f - F(0)|| + ||f||))**(1/3)``."""
    lam = bounds.M1 * (1.0 / y_norm + 4.0 * bounds.c0)
    a0 = (lam * (f_norm_minus_F0 + f_norm)) ** (1.0 / 3.0)
    return PowerSchedule.from_a0(a0, b=b, c=c), ScheduleParams(lam=lam, a0=a0, C=C)


def heuristic_a0(delta: float, zeta: float, C0: float) -> float:
    """Practical starting value ``a0 = C0 * delta**zeta``."""
    if not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    if not (0 < zeta <= 1):
        raise ParameterError(f"zeta must lie in (0, 1], got {zeta}")
    if not C0 > 0:
        raise ParameterError(f"C0 must be positive, got {C0}")
    return C0 * delta**zeta


@dataclass(frozen=True)
class IntegralInequalityRow:
    t: float
    lhs_weighted: float
    rhs_weighted: float
    lhs_drift: float
    rhs_drift: float

    @property
    def margin_weighted(self) -> float:
        return self.rhs_weighted - self.lhs_weighted

    @property
    def margin_drift(self) -> float:
        return self.rhs_drift - self.lhs_drift


def _psi_function(psi_samples) -> tuple[Callable[[float], float], np.ndarray]:
    """Return psi as a callable plus its interpolation knots (empty if smooth)."""
    if psi_samples is None:
        return (lambda s: 1.0), np.empty(0)
    if callable(psi_samples):
        return psi_samples, np.empty(0)
    pts = np.asarray(sorted(psi_samples), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ParameterError("psi_samples must be a sequence of (s, psi) pairs")
    s, v = pts[:, 0], pts[:, 1]
    return (lambda x: float(np.interp(x, s, v))), s


def verify_integral_lemmas(
    schedule: PowerSchedule,
    t_grid: Sequence[float],
    psi_samples=None,
) -> list[IntegralInequalityRow]:
    """Evaluate both integral inequalities of the schedule at each ``t``.

    The first is

        (d^2/2)(1 - 2b/(c^theta d^2)) int_0^t e^phi(s) / (s+c)^(3b) ds < e^phi(t) / (c+t)^b,

    the second

        e^-phi(t) int_0^t e^phi(s) |a'(s)| psi(s) ds <= a(t) psi(t) / 2,

    with ``phi(t) = int_0^t a^2/2``.  Both sides of the first are reported
    multiplied by ``e^-phi(t)`` to avoid overflow.  ``psi_samples`` is a
    sequence of ``(s, ||V(a(s))||)`` pairs (linearly interpolated) or a
    callable; if omitted ``psi = 1`` is used.

    Raises
    ------
    PreconditionError
        If the schedule fails :func:`validate_continuous` or the premise
        ``c^(1-2b) d^2 >= 6b``.
    AssertionError
        If an inequality is violated.
    """
    report = validate_continuous(schedule)
    failed = report.failed + ([] if report["strong_premise"].passed else ["strong_premise"])
    if failed:
        raise PreconditionError(f"schedule violates {', '.join(failed)}")
    psi, knots = _psi_function(psi_samples)
    if knots.size and any(t > knots[-1] for t in t_grid):
        raise ParameterError(f"psi samples end at s={knots[-1]:g}, before the largest t")
    d, c, b, th = schedule.d, schedule.c, schedule.b, schedule.theta
    front = 0.5 * d * d * (1.0 - 2.0 * b / (c**th * d * d))
    phi = schedule.half_square_integral

    rows = []
    for t in t_grid:
        t = float(t)
        if t < 0:
            raise ParameterError("t must be nonnegative")
        pt = phi(t)
        if t == 0.0:
            rows.append(IntegralInequalityRow(0.0, 0.0, 1.0 / c**b, 0.0, 0.5 * schedule.a(0.0) * psi(0.0)))
            continue
        i1, _ = integrate.quad(lambda s: math.exp(phi(s) - pt) / (s + c) ** (3 * b), 0.0, t,
                               epsabs=0.0, epsrel=1e-12, limit=200)
        inner = knots[(knots > 0.0) & (knots < t)]
        i2, _ = integrate.quad(lambda s: math.exp(phi(s) - pt) * abs(schedule.a_dot(s)) * psi(s), 0.0, t,
                               epsabs=0.0, epsrel=1e-10, limit=400 + 2 * inner.size,
                               points=inner if inner.size else None)
        row = IntegralInequalityRow(t, front * i1, 1.0 / (c + t) ** b, i2, 0.5 * schedule.a(t) * psi(t))
        assert row.lhs_weighted < row.rhs_weighted, f"first inequality fails at t={t}: {row}"
        assert row.lhs_drift <= row.rhs_drift, f"second inequality fails at t={t}: {row}"
        rows.append(row)
    return rows
