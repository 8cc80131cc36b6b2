"""Run one configured experiment (or a sweep) and write its CSV tables."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..errors import DSMError, ParameterError
from ..hilbert import norm
from ..operator import MonotoneProblem, wiener_problem
from ..schedule import PowerSchedule, StepSizePolicy, heuristic_a0
from ..solver import SolveReport, StopRule, dsmg_flow, dsmg_iterate, dsmn_iterate
from .config import ExperimentConfig
from .noise import make_noisy_rhs

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentRecord",
    "SUMMARY_COLUMNS",
    "build_problem",
    "run_experiment",
    "run_sweep",
    "write_summary",
    "write_solution",
    "format_table",
]

SUMMARY_COLUMNS = (
    "method",
    "problem",
    "target",
    "n_points",
    "delta_rel",
    "delta",
    "seed",
    "status",
    "stopped_by",
    "n_delta",
    "t_delta",
    "residual_at_stop",
    "threshold",
    "error_vs_y",
    "relative_error",
    "alpha_clipped",
    "wall_time",
)


@dataclass
class ExperimentRecord:
    config: ExperimentConfig
    summary: dict
    solution_rows: list[tuple[float, float, float]] = field(default_factory=list)
    report: Optional[SolveReport] = None

    @property
    def ok(self) -> bool:
        return self.summary["status"] == "ok"


def build_problem(config: ExperimentConfig) -> MonotoneProblem:
    sign = -1.0 if config.problem == "wiener-anti" else 1.0
    return wiener_problem(config.n_points, config.target, radius=config.radius, cubic_sign=sign)


def _solve(config, problem, f_delta, delta) -> SolveReport:
    stop = StopRule(config.C1, config.zeta, delta, config.max_iterations)
    a0 = heuristic_a0(delta, config.zeta, config.effective_C0)
    b = config.effective_b
    if config.method == "dsmn":
        return dsmn_iterate(problem, f_delta, a0, stop, b=b)
    schedule = PowerSchedule.from_a0(a0, b=b, c=config.c)
    if config.method == "dsmg":
        steps = StepSizePolicy(alpha=config.alpha, mode=config.alpha_mode)
        return dsmg_iterate(problem, f_delta, schedule, steps, stop)
    return dsmg_flow(problem, f_delta, schedule, stop, dt=config.dt, t_max=config.t_max)


def run_experiment(config: ExperimentConfig, write: bool = True) -> ExperimentRecord:
    """Build the problem, add noise, run the configured method.

    Solver failures are caught and recorded in the ``status`` column.
    A zero noise level is rejected up front because the discrepancy
    threshold would be zero.
    """
    if config.delta_rel <= 0:
        raise ParameterError(
            f"delta_rel={config.delta_rel}: discrepancy stopping needs a positive noise level"
        )
    problem = build_problem(config)
    f_delta, delta = make_noisy_rhs(problem.rhs_exact, config.delta_rel, config.seed)
    summary = {
        "method": config.method,
        "problem": config.problem,
        "target": config.target,
        "n_points": config.n_points,
        "delta_rel": config.delta_rel,
        "delta": delta,
        "seed": config.seed,
    }
    record = ExperimentRecord(config, summary)
    try:
        report = _solve(config, problem, f_delta, delta)
    except DSMError as exc:
        log.error("%s failed: %s", config.method, exc)
        summary.update(status=f"error: {exc}", stopped_by="", n_delta="", t_delta="",
                       residual_at_stop="", threshold="", error_vs_y="", relative_error="",
                       alpha_clipped="", wall_time="")
    else:
        record.report = report
        summary.update(
            status="ok",
            stopped_by=report.stopped_by,
            n_delta=report.n_delta,
            t_delta="" if report.t_delta is None else report.t_delta,
            residual_at_stop=report.residual_at_stop,
            threshold=report.threshold,
            error_vs_y=report.error_vs_y,
            relative_error=report.relative_error,
            alpha_clipped=report.alpha_clipped,
            wall_time=report.wall_time,
        )
        x = problem.grid.nodes
        y = problem.exact_solution.values
        u = report.final.values
        record.solution_rows = [(float(x[i]), float(y[i]), float(u[i])) for i in range(len(x))]
    if write and config.output_path:
        out = Path(config.output_path)
        write_summary([record], out / "summary.csv")
        if record.solution_rows:
            write_solution(record, out / "solution.csv")
    return record


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_summary(records, path, timing: bool = False) -> Path:
    """Write the summary table.  ``wall_time`` is left out unless ``timing``
    so that repeated runs give byte-identical files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [c for c in SUMMARY_COLUMNS if timing or c != "wall_time"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for rec in records:
            writer.writerow([_fmt(rec.summary.get(c, "")) for c in cols])
    return path


def write_solution(record: ExperimentRecord, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("x", "u_exact", "u_numeric"))
        for row in record.solution_rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _run_quiet(config):
    return run_experiment(config, write=False)


def run_sweep(configs, output_dir=None, jobs: int = 1, timing: bool = False) -> list[ExperimentRecord]:
    """Run several experiments, optionally in worker processes.

    Each run's solution goes to its own file; the summary is merged at the
    end in input order.
    """
    configs = list(configs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_quiet, configs))
    else:
        records = [_run_quiet(c) for c in configs]
    if output_dir is not None:
        out = Path(output_dir)
        for rec in records:
            c = rec.config
            if rec.solution_rows:
                tag = f"{c.method}_{c.target}_N{c.n_points}_d{c.delta_rel:g}_s{c.seed}"
                write_solution(rec, out / f"solution_{tag}.csv")
        write_summary(records, out / "summary.csv", timing=timing)
    return records


def format_table(records, columns=("method", "target", "delta_rel", "seed", "status", "n_delta",
                                   "residual_at_stop", "relative_error", "wall_time")) -> str:
    """Aligned plain-text table of summary rows."""

    def cell(v):
        if isinstance(v, float):
            return f"{v:.4g}"
        return str(v)

    rows = [[cell(r.summary.get(c, "")) for c in columns] for r in records]
    widths = [max(len(c), *(len(row[i]) for row in rows)) if rows else len(c) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in rows]
    return "\n".join(lines)
