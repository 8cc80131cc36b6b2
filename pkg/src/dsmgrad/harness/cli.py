"""Command line entry point: ``dsmgrad {solve,experiment,verify-lemmas,plot-data}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from ..errors import DSMError
from .config import expand_sweep, load_config
from .experiment import format_table, run_experiment, run_sweep
from .lemmas import format_results, verify_lemmas

log = logging.getLogger("dsmgrad")


def _add_common(p, sweep=False):
    kind = str if sweep else None

    def typ(t):
        return kind or t

    p.add_argument("--config", help="flat key = value config file; flags override it")
    p.add_argument("--problem", choices=("wiener", "wiener-anti"))
    p.add_argument("--target", type=typ(str), help="one | sin-pi | sin-2pi")
    p.add_argument("--n-points", dest="n_points", type=typ(int))
    p.add_argument("--delta-rel", dest="delta_rel", type=typ(float))
    p.add_argument("--method", type=typ(str), help="dsmg | dsmg-flow | dsmn")
    p.add_argument("--c1", dest="C1", type=float)
    p.add_argument("--zeta", type=float)
    p.add_argument("--c0", dest="C0", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--alpha-mode", dest="alpha_mode", choices=("capped", "constant"))
    p.add_argument("--radius", type=float, help="sup-norm radius of the working ball (sets M1, M2)")
    p.add_argument("--dt", type=float)
    p.add_argument("--seed", type=typ(int))
    p.add_argument("--max-iter", dest="max_iterations", type=int)
    p.add_argument("--out", dest="output_path")
    p.add_argument("-v", "--verbose", action="store_true")


_KEYS = ("problem", "target", "n_points", "delta_rel", "method", "C1", "zeta", "C0", "b", "c",
         "alpha", "alpha_mode", "radius", "dt", "seed", "max_iterations", "output_path")


def _overrides(args):
    return {k: getattr(args, k) for k in _KEYS if getattr(args, k, None) is not None}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dsmgrad", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one experiment")
    _add_common(p)

    p = sub.add_parser("experiment", help="sweep over comma-separated target/n-points/delta-rel/method/seed")
    _add_common(p, sweep=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="include wall_time in summary.csv")

    p = sub.add_parser("verify-lemmas", help="run the structural oracle suite")
    _add_common(p)
    p.add_argument("--lemma-d", dest="lemma_d", type=float, help="d of the schedule used by the integral checks")

    p = sub.add_parser("plot-data", help="emit x, exact, DSMG and DSMN columns for one setting")
    _add_common(p)
    return parser


def _cmd_solve(args):
    config = load_config(args.config, **_overrides(args))
    record = run_experiment(config)
    print(format_table([record]))
    return 0 if record.ok else 1


def _cmd_experiment(args):
    overrides = _overrides(args)
    out = overrides.pop("output_path", None)
    configs = expand_sweep(args.config, **overrides)
    records = run_sweep(configs, output_dir=out, jobs=args.jobs, timing=args.timing)
    print(format_table(records))
    return 0 if all(r.ok for r in records) else 1


def _cmd_verify(args):
    overrides = _overrides(args)
    if args.lemma_d is not None:
        overrides["lemma_d"] = args.lemma_d
    results = verify_lemmas(load_config(args.config, **overrides))
    print(format_results(results))
    return 0 if all(r.passed for r in results) else 1


def _cmd_plot_data(args):
    config = load_config(args.config, **_overrides(args))
    columns = {}
    for method in ("dsmg", "dsmn"):
        rec = run_experiment(config.with_overrides(method=method, output_path=None, C0=None, b=None), write=False)
        if not rec.ok:
            print(f"{method}: {rec.summary['status']}", file=sys.stderr)
            return 1
        columns[method] = rec.solution_rows
    out = open(Path(config.output_path), "w", newline="") if config.output_path else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(("x", "u_exact", "u_dsmg", "u_dsmn"))
        for (x, ue, ug), (_, _, un) in zip(columns["dsmg"], columns["dsmn"]):
            writer.writerow([format(v, ".17g") for v in (x, ue, ug, un)])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {
        "solve": _cmd_solve,
        "experiment": _cmd_experiment,
        "verify-lemmas": _cmd_verify,
        "plot-data": _cmd_plot_data,
    }
    try:
        return handlers[args.command](args)
    except DSMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
