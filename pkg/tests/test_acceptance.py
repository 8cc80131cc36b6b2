"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (visible with ``-s`` or in
the captured output of a failure) before asserting.  Runtime budgets are
part of each criterion.
"""

import sys
import time

import numpy as np
import pytest

from dsmgrad import (
    PowerSchedule,
    StepSizePolicy,
    StopRule,
    dsmg_flow,
    dsmg_iterate,
    dsmn_iterate,
    heuristic_a0,
    kappa_scale,
    norm,
    perturbation_bound_check,
    phi_psi_curve,
    remark_construction,
    solve_regularized,
    step_band_upper,
    validate_continuous,
    validate_discrete,
    verify_integral_lemmas,
    wiener_problem,
)
from dsmgrad.harness import ExperimentConfig, make_noisy_rhs, run_experiment
from dsmgrad.harness.lemmas import adjoint_check, derivative_check, monotonicity_sweep
from dsmgrad.operator import wiener_exact_rhs

TOL = 1e-10


def _report(number, title, ok, detail, elapsed, budget):
    ok = ok and elapsed < budget
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {detail} [{elapsed:.2f}s / {budget:g}s]")
    assert ok, detail


def test_criterion_01_exact_solution_identity():
    start = time.perf_counter()

    def err(n):
        p = wiener_problem(n, "one")
        return float(np.max(np.abs(p.forward(np.ones(n)) - wiener_exact_rhs(p.grid.nodes))))

    e100, e200 = err(100), err(200)
    ratio = e100 / e200
    ok = e100 <= 1.5e-3 and 3.5 <= ratio <= 4.5
    _report(1, "exact-solution identity", ok, f"max err N=100 {e100:.3e}, ratio N=100/200 {ratio:.3f}",
            time.perf_counter() - start, 1.0)


def test_criterion_02_monotonicity_suite():
    start = time.perf_counter()
    p = wiener_problem(100, "one")
    mono = monotonicity_sweep(p, pairs=1000)
    fd = derivative_check(p, samples=100)
    adj = adjoint_check(p, samples=100)
    ok = mono >= -1e-12 and fd <= 1e-6 and adj <= 1e-10
    _report(2, "monotonicity suite", ok, f"min pairing {mono:.3e}, FD gap {fd:.2e}, adjoint defect {adj:.2e}",
            time.perf_counter() - start, 10.0)


def test_criterion_03_phi_psi_monotone():
    start = time.perf_counter()
    p = wiener_problem(100, "one")
    f_delta, _ = make_noisy_rhs(p.rhs_exact, 0.01, 0)
    curve = phi_psi_curve(p, f_delta, np.logspace(1, -3, 25), TOL)
    dphi = np.diff([c[1] for c in curve])
    dpsi = np.diff([c[2] for c in curve])
    slack = 10 * TOL
    ok = bool(np.all(dphi < -slack) and np.all(dpsi > slack))
    _report(3, "phi decreasing / psi increasing", ok,
            f"max phi step {dphi.max():.3e}, min psi step {dpsi.min():.3e}", time.perf_counter() - start, 30.0)


def test_criterion_04_perturbation_bounds():
    start = time.perf_counter()
    p = wiener_problem(100, "one")
    f_delta, delta = make_noisy_rhs(p.rhs_exact, 0.01, 0)
    y_norm = norm(p.exact_solution)
    ok, parts = True, []
    for a in (1e-1, 1e-2, 1e-3):
        lhs, rhs = perturbation_bound_check(p, p.rhs_exact, f_delta, a, TOL)
        v = solve_regularized(p, a, p.rhs_exact, TOL).psi
        ok &= lhs <= delta / a + 1e-8 and v <= y_norm + 1e-8
        parts.append(f"a={a:g}: {lhs:.3e}<={rhs:.3e}, ||V||={v:.6f}")
    _report(4, "perturbation bounds", ok, "; ".join(parts), time.perf_counter() - start, 10.0)


def test_criterion_05_integral_inequalities():
    start = time.perf_counter()
    p = wiener_problem(100, "one")
    f_delta, _ = make_noisy_rhs(p.rhs_exact, 0.01, 0)
    s = PowerSchedule(2.0, 1.0, 0.25)
    ts = [0.5, 1.0, 5.0, 20.0]
    samples, V = [], None
    for t in np.linspace(0.0, 20.0, 81):
        sol = solve_regularized(p, s.a(t), f_delta, TOL, initial=V)
        V = sol.V
        samples.append((t, sol.psi))
    m1 = min(r.margin_weighted for r in verify_integral_lemmas(s, ts))
    m2 = min(r.margin_drift for r in verify_integral_lemmas(s, ts, samples))
    _report(5, "integral inequalities", m1 > 0 and m2 >= 0, f"min margins {m1:.3e} and {m2:.3e}",
            time.perf_counter() - start, 30.0)


def _run(method, target="one", delta_rel=0.01, seed=0, n_points=100):
    cfg = ExperimentConfig(method=method, target=target, delta_rel=delta_rel, seed=seed, n_points=n_points)
    return run_experiment(cfg, write=False)


def test_criterion_06_dsmg_discrepancy_experiment():
    start = time.perf_counter()
    ok, parts = True, []
    for rel, err_limit in ((0.01, 0.1), (0.001, 0.05)):
        rec = _run("dsmg", delta_rel=rel)
        r = rec.report
        ok &= (r.stopped_by == "discrepancy" and r.residual_at_stop <= r.threshold
               and 15 <= r.n_delta <= 250 and r.relative_error <= err_limit)
        parts.append(f"delta_rel={rel:g}: n_delta={r.n_delta}, rel err={r.relative_error:.4f}")
    _report(6, "DSMG discrepancy experiment", ok, "; ".join(parts), time.perf_counter() - start, 60.0)


def _per_iteration_time(run, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        report = run()
        best = min(best, (time.perf_counter() - t0) / max(report.n_delta, 1))
    return best


def _timing_ratio(method, iterations):
    times = {}
    for n in (100, 200):
        p = wiener_problem(n, "one")
        f_delta, delta = make_noisy_rhs(p.rhs_exact, 0.01, 0)
        # fixed iteration count so both sizes do identical work per step
        stop = StopRule(1.01, 0.99, 1e-12, max_iterations=iterations)
        a0 = heuristic_a0(delta, 0.99, 1.0 if method == "dsmn" else 0.5)
        if method == "dsmn":
            times[n] = _per_iteration_time(lambda: dsmn_iterate(p, f_delta, a0, stop, keep_iterates=False))
        else:
            sched = PowerSchedule.from_a0(a0)
            times[n] = _per_iteration_time(
                lambda: dsmg_iterate(p, f_delta, sched, StepSizePolicy(1.0), stop, keep_iterates=False))
    return times[200] / times[100]


def test_criterion_07_dsmn_baseline_and_cost_scaling():
    start = time.perf_counter()
    ok, parts = True, []
    for rel in (0.01, 0.001):
        n_rec, g_rec = _run("dsmn", delta_rel=rel), _run("dsmg", delta_rel=rel)
        r = n_rec.report
        comparable = r.relative_error <= 2 * max(g_rec.report.relative_error, 0.01)
        ok &= r.stopped_by == "discrepancy" and 4 <= r.n_delta <= 25 and comparable
        parts.append(f"delta_rel={rel:g}: n_delta={r.n_delta}, rel err={r.relative_error:.4f}")
    dsmn_ratio = _timing_ratio("dsmn", 15)
    dsmg_ratio = _timing_ratio("dsmg", 200)
    ok &= dsmn_ratio >= 6 and dsmg_ratio <= 5
    parts.append(f"time/iter ratio N=200 vs 100: DSMN {dsmn_ratio:.2f} (need >= 6), DSMG {dsmg_ratio:.2f} (need <= 5)")
    _report(7, "DSMN baseline and cost scaling", ok, "; ".join(parts), time.perf_counter() - start, 120.0)


def test_criterion_08_delta_refinement():
    start = time.perf_counter()
    p = wiener_problem(100, "one")
    it_err, flow_err = [], []
    for rel in (1e-1, 1e-2, 1e-3):
        f_delta, delta = make_noisy_rhs(p.rhs_exact, rel, 0)
        it_err.append(_run("dsmg", delta_rel=rel).report.error_vs_y)
        sched = PowerSchedule.from_a0(heuristic_a0(delta, 0.99, 0.5))
        flow = dsmg_flow(p, f_delta, sched, StopRule(1.01, 0.99, delta), dt=0.1, t_max=1e5)
        flow_err.append(flow.error_vs_y if flow.stopped_by == "discrepancy" else np.inf)
    ok = it_err[0] > it_err[1] > it_err[2] and flow_err[0] > flow_err[1] > flow_err[2]
    detail = ("iterate " + ", ".join(f"{e:.4f}" for e in it_err) + "; flow " + ", ".join(f"{e:.4f}" for e in flow_err))
    _report(8, "delta-refinement convergence", ok, detail, time.perf_counter() - start, 120.0)


def test_criterion_09_sin_targets():
    start = time.perf_counter()
    ok, parts = True, []
    for target in ("sin-2pi", "sin-pi"):
        wins = 0
        for seed in range(5):
            g = _run("dsmg", target=target, seed=seed).report
            n = _run("dsmn", target=target, seed=seed).report
            wins += g.error_vs_y <= n.error_vs_y
        ok &= wins >= 4
        parts.append(f"{target}: DSMG error <= DSMN on {wins}/5 seeds")
    n_sin = _run("dsmg", target="sin-2pi").report.n_delta
    n_one = _run("dsmg", target="one").report.n_delta
    ok &= n_sin >= 2 * n_one
    parts.append(f"n_delta sin-2pi {n_sin} vs one {n_one}")
    _report(9, "sin-target comparison", ok, "; ".join(parts), time.perf_counter() - start, 180.0)


def test_criterion_10_schedule_validators():
    start = time.perf_counter()
    p = wiener_problem(100, "one")
    f_delta, _ = make_noisy_rhs(p.rhs_exact, 0.01, 0)
    zero = p.grid.zeros()
    y_norm = norm(p.exact_solution)
    fdn = norm(f_delta - p.apply(zero))
    base, params = remark_construction(p.bounds, y_norm, norm(p.rhs_exact - p.apply(zero)), norm(p.rhs_exact),
                                       (1.01 + 1) / 2)
    floor = step_band_upper(params.a0, p.bounds.M1)
    sched, sparams, kappa = kappa_scale(base, params, p.bounds, fdn, y_norm, floor)
    report = validate_discrete(sched, sparams, p.bounds, fdn, y_norm, floor, n_check=10_000)
    required = ("ratio_bound", "data_bound", "lambda_lower", "nonlinearity_bound", "recursion")
    five = all(report[name].passed for name in required)
    bad_b = validate_continuous(PowerSchedule(1.0, 1.0, 0.3)).failed
    bad_d = validate_continuous(PowerSchedule(0.5, 1.0, 0.25)).failed
    ok = five and "b_range" in bad_b and bad_d == ["rate_ratio"]
    _report(10, "schedule validators", ok, f"kappa={kappa:.4g}, five conditions hold={five}, "
            f"b=0.3 fails {bad_b}, d=0.5 fails {bad_d}", time.perf_counter() - start, 1.0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
