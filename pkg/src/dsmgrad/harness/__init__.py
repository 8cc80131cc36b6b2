"""Experiment orchestration, lemma checks and the command line interface."""

from .config import ExperimentConfig, load_config
from .experiment import ExperimentRecord, build_problem, run_experiment, run_sweep
from .lemmas import OracleResult, verify_lemmas
from .noise import NoiseModel, make_noisy_rhs

__all__ = [
    "ExperimentConfig",
    "ExperimentRecord",
    "NoiseModel",
    "OracleResult",
    "build_problem",
    "load_config",
    "make_noisy_rhs",
    "run_experiment",
    "run_sweep",
    "verify_lemmas",
]
