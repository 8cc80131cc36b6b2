import csv

import numpy as np
import pytest

from dsmgrad import ParameterError, norm, wiener_problem
from dsmgrad.harness import ExperimentConfig, NoiseModel, load_config, make_noisy_rhs, run_experiment, run_sweep, verify_lemmas
from dsmgrad.harness.cli import main
from dsmgrad.harness.config import expand_sweep, parse_config_text
from dsmgrad.harness.experiment import SUMMARY_COLUMNS, format_table
from dsmgrad.harness.lemmas import format_results


@pytest.mark.parametrize("seed", [0, 1, 7, 12345])
@pytest.mark.parametrize("rel", [1e-1, 1e-2, 1e-3])
def test_noise_level_exact(wiener100, seed, rel):
    f = wiener100.rhs_exact
    f_delta, delta = make_noisy_rhs(f, rel, seed)
    assert delta == rel * norm(f)
    assert abs(norm(f_delta - f) - delta) <= 1e-12 * delta


def test_noise_deterministic(wiener100):
    a, _ = make_noisy_rhs(wiener100.rhs_exact, 0.01, 3)
    b, _ = make_noisy_rhs(wiener100.rhs_exact, 0.01, 3)
    c, _ = make_noisy_rhs(wiener100.rhs_exact, 0.01, 4)
    assert a.values.tobytes() == b.values.tobytes()
    assert not np.array_equal(a.values, c.values)


def test_noise_generator_is_default_rng():
    assert np.array_equal(NoiseModel(5).draw(10), np.random.default_rng(5).standard_normal(10))


def test_zero_noise(wiener100):
    f = wiener100.rhs_exact
    f_delta, delta = make_noisy_rhs(f, 0.0, 0)
    assert delta == 0.0 and f_delta is f


def test_noise_errors(wiener100):
    with pytest.raises(ParameterError):
        make_noisy_rhs(wiener100.grid.zeros(), 0.01, 0)
    with pytest.raises(ParameterError):
        make_noisy_rhs(wiener100.rhs_exact, -0.01, 0)
    with pytest.raises(ParameterError):
        NoiseModel(-1)


def test_noise_redraws_zero_vector(wiener100, monkeypatch):
    calls = []

    def draw(self, n, attempt=0):
        calls.append(attempt)
        return np.zeros(n) if attempt == 0 else np.ones(n)

    monkeypatch.setattr(NoiseModel, "draw", draw)
    f_delta, delta = make_noisy_rhs(wiener100.rhs_exact, 0.01, 0)
    assert calls == [0, 1]
    assert norm(f_delta - wiener100.rhs_exact) == pytest.approx(delta, rel=1e-12)
    monkeypatch.setattr(NoiseModel, "draw", lambda self, n, attempt=0: np.zeros(n))
    with pytest.raises(ParameterError):
        make_noisy_rhs(wiener100.rhs_exact, 0.01, 0)


def test_config_defaults():
    cfg = ExperimentConfig()
    assert (cfg.n_points, cfg.C1, cfg.zeta, cfg.target, cfg.method) == (100, 1.01, 0.99, "one", "dsmg")
    assert (cfg.effective_C0, cfg.effective_b) == (0.5, 0.25)
    dsmn = cfg.with_overrides(method="dsmn")
    assert (dsmn.effective_C0, dsmn.effective_b) == (1.0, 1.0)
    assert cfg.with_overrides(C0=2.0, b=None).effective_C0 == 2.0


@pytest.mark.parametrize("kw", [
    dict(problem="heat"), dict(target="cos"), dict(method="cg"), dict(n_points=1), dict(delta_rel=-1.0),
    dict(C1=1.0), dict(zeta=0.0), dict(C0=0.0), dict(b=0.0), dict(alpha=0.0), dict(alpha_mode="x"),
])
def test_config_validation(kw):
    with pytest.raises(ParameterError):
        ExperimentConfig(**kw)


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\ntarget = sin-pi\nn-points = 80  # trailing\nc1 = 1.05\nC0 = none\nmax_iter = 500\n")
    cfg = load_config(path, n_points=60)
    assert cfg.target == "sin-pi" and cfg.n_points == 60 and cfg.C1 == 1.05
    assert cfg.C0 is None and cfg.max_iterations == 500


@pytest.mark.parametrize("text", ["nonsense", "colour = red"])
def test_config_parse_errors(text):
    with pytest.raises(ParameterError):
        parse_config_text(text)


def test_expand_sweep(tmp_path):
    path = tmp_path / "sweep.cfg"
    path.write_text("delta_rel = 0.1, 0.01\nmethod = dsmg,dsmn\n")
    configs = expand_sweep(path, seed="0,1")
    assert len(configs) == 8
    assert {(c.delta_rel, c.method, c.seed) for c in configs} == {
        (d, m, s) for d in (0.1, 0.01) for m in ("dsmg", "dsmn") for s in (0, 1)
    }


def test_run_experiment_defaults(tmp_path):
    rec = run_experiment(ExperimentConfig(output_path=str(tmp_path)))
    assert rec.ok
    s = rec.summary
    assert s["stopped_by"] == "discrepancy"
    assert 15 <= s["n_delta"] <= 250
    assert s["relative_error"] <= 0.1
    rows = list(csv.reader((tmp_path / "summary.csv").open()))
    assert rows[0] == [c for c in SUMMARY_COLUMNS if c != "wall_time"]
    sol = list(csv.reader((tmp_path / "solution.csv").open()))
    assert sol[0] == ["x", "u_exact", "u_numeric"] and len(sol) == 101


def test_run_experiment_sin_2pi_dsmg_beats_dsmn():
    errs = {m: run_experiment(ExperimentConfig(target="sin-2pi", method=m), write=False).summary["error_vs_y"]
            for m in ("dsmg", "dsmn")}
    assert errs["dsmg"] <= errs["dsmn"]


def test_run_experiment_zero_noise_rejected():
    with pytest.raises(ParameterError, match="positive noise"):
        run_experiment(ExperimentConfig(delta_rel=0.0))


def test_run_experiment_records_solver_error():
    rec = run_experiment(ExperimentConfig(alpha=50.0, alpha_mode="constant"), write=False)
    assert not rec.ok
    assert rec.summary["status"].startswith("error")
    assert rec.solution_rows == []


def test_csv_byte_identical(tmp_path):
    cfg = ExperimentConfig(target="sin-pi")
    run_experiment(cfg.with_overrides(output_path=str(tmp_path / "a")))
    run_experiment(cfg.with_overrides(output_path=str(tmp_path / "b")))
    for name in ("summary.csv", "solution.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep_parallel_matches_serial(tmp_path):
    configs = expand_sweep(None, delta_rel="0.1,0.01", method="dsmg,dsmn")
    run_sweep(configs, tmp_path / "serial", jobs=1)
    run_sweep(configs, tmp_path / "parallel", jobs=2)
    serial = sorted(p.name for p in (tmp_path / "serial").iterdir())
    assert serial == sorted(p.name for p in (tmp_path / "parallel").iterdir())
    for name in serial:
        assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "parallel" / name).read_bytes()
    assert len(serial) == 5


def test_sweep_timing_column(tmp_path):
    run_sweep([ExperimentConfig()], tmp_path, timing=True)
    header = (tmp_path / "summary.csv").read_text().splitlines()[0].split(",")
    assert header[-1] == "wall_time"


def test_format_table():
    rec = run_experiment(ExperimentConfig(), write=False)
    text = format_table([rec])
    assert text.splitlines()[0].startswith("method")
    assert "dsmg" in text.splitlines()[2]


def test_verify_lemmas_default_all_pass():
    results = verify_lemmas()
    assert [r.name for r in results if not r.passed] == []
    assert len(results) == 11
    assert "PASS" in format_results(results)


def test_verify_lemmas_anti_monotone():
    results = {r.name: r for r in verify_lemmas(ExperimentConfig(problem="wiener-anti"))}
    assert not results["monotonicity"].passed
    assert results["adjoint_identity"].passed


def test_verify_lemmas_bad_b_keeps_running():
    results = {r.name: r for r in verify_lemmas(ExperimentConfig(b=0.3))}
    assert not results["continuous_schedule"].passed
    assert "b_range" in results["continuous_schedule"].detail
    assert results["monotonicity"].passed
    assert results["phi_psi_monotone"].passed
    assert len(results) == 11


def test_sin_rhs_from_refined_grid():
    p = wiener_problem(100, "sin-2pi")
    delta = 0.01 * norm(p.rhs_exact)
    assert norm(p.apply(p.exact_solution) - p.rhs_exact) <= delta / 10


def test_cli_solve(tmp_path, capsys):
    assert main(["solve", "--target", "sin-pi", "--out", str(tmp_path)]) == 0
    assert "sin-pi" in capsys.readouterr().out
    assert (tmp_path / "summary.csv").exists() and (tmp_path / "solution.csv").exists()


def test_cli_config_file_overridden_by_flags(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("method = dsmn\ndelta_rel = 0.1\n")
    assert main(["solve", "--config", str(cfg), "--delta-rel", "0.01", "--out", str(tmp_path)]) == 0
    row = list(csv.DictReader((tmp_path / "summary.csv").open()))[0]
    assert row["method"] == "dsmn" and float(row["delta_rel"]) == 0.01


def test_cli_experiment(tmp_path, capsys):
    code = main(["experiment", "--method", "dsmg,dsmn", "--delta-rel", "0.1", "--out", str(tmp_path), "--jobs", "2"])
    assert code == 0
    assert len(list(csv.DictReader((tmp_path / "summary.csv").open()))) == 2


def test_cli_verify_lemmas(capsys):
    assert main(["verify-lemmas"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 11
    assert main(["verify-lemmas", "--b", "0.3"]) == 1
    assert "FAIL  continuous_schedule" in capsys.readouterr().out


def test_cli_plot_data(tmp_path):
    out = tmp_path / "fig.csv"
    assert main(["plot-data", "--target", "sin-2pi", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["x", "u_exact", "u_dsmg", "u_dsmn"] and len(rows) == 101


def test_cli_error_exit_code(capsys):
    assert main(["solve", "--delta-rel", "0"]) == 2
    assert "error" in capsys.readouterr().err
