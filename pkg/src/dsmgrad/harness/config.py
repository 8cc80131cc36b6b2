"""Experiment configuration: a flat ``key = value`` file plus CLI overrides."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

from ..errors import ParameterError
from ..operator import TARGETS

__all__ = ["ExperimentConfig", "load_config", "parse_config_text", "expand_sweep", "METHODS"]

METHODS = ("dsmg", "dsmg-flow", "dsmn")

# C0 and b per method when not given explicitly.
METHOD_DEFAULTS = {
    "dsmg": (0.5, 0.25),
    "dsmg-flow": (0.5, 0.25),
    "dsmn": (1.0, 1.0),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment.  Defaults reproduce the published Wiener-problem runs."""

    problem: str = "wiener"
    target: str = "one"
    n_points: int = 100
    delta_rel: float = 0.01
    method: str = "dsmg"
    C1: float = 1.01
    zeta: float = 0.99
    C0: Optional[float] = None
    b: Optional[float] = None
    c: float = 1.0
    alpha: float = 1.0
    alpha_mode: str = "capped"
    seed: int = 0
    max_iterations: int = 200_000
    radius: float = 2.0
    dt: float = 0.1
    t_max: float = 1.0e5
    lemma_d: float = 2.0
    output_path: Optional[str] = None

    def __post_init__(self):
        if self.problem not in ("wiener", "wiener-anti"):
            raise ParameterError(f"unknown problem {self.problem!r}")
        if self.target not in TARGETS:
            raise ParameterError(f"unknown target {self.target!r}; choose from {sorted(TARGETS)}")
        if self.method not in METHODS:
            raise ParameterError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.n_points < 2:
            raise ParameterError("n_points must be at least 2")
        if self.delta_rel < 0:
            raise ParameterError("delta_rel must be nonnegative")
        if self.C1 <= 1:
            raise ParameterError("C1 must exceed 1")
        if not 0 < self.zeta <= 1:
            raise ParameterError("zeta must lie in (0, 1]")
        if self.C0 is not None and self.C0 <= 0:
            raise ParameterError("C0 must be positive")
        if self.b is not None and self.b <= 0:
            raise ParameterError("b must be positive")
        if self.c <= 0 or self.alpha <= 0 or self.dt <= 0 or self.radius <= 0:
            raise ParameterError("c, alpha, dt and radius must be positive")
        if self.alpha_mode not in ("capped", "constant"):
            raise ParameterError("alpha_mode must be 'capped' or 'constant'")

    @property
    def effective_C0(self) -> float:
        return self.C0 if self.C0 is not None else METHOD_DEFAULTS[self.method][0]

    @property
    def effective_b(self) -> float:
        return self.b if self.b is not None else METHOD_DEFAULTS[self.method][1]

    def with_overrides(self, **overrides) -> ExperimentConfig:
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def as_dict(self) -> dict:
        return asdict(self)


_ALIASES = {"c1": "C1", "c0": "C0", "max_iter": "max_iterations", "out": "output_path"}


def _coerce(name, raw):
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    kind = types[name]
    raw = raw.strip()
    if raw.lower() in ("none", "") and "Optional" in str(kind):
        return None
    if "int" in str(kind):
        return int(raw)
    if "float" in str(kind):
        return float(raw)
    return raw


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Keys may use dashes or underscores and the CLI spellings (``c1``,
    ``max-iter``, ``out``).  Values stay strings so sweeps can hold
    comma-separated lists; :func:`load_config` coerces them.
    """
    out = {}
    valid = {f.name for f in fields(ExperimentConfig)}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        key = _ALIASES.get(key, key)
        if key not in valid:
            raise ParameterError(f"config line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Read a config file (optional) and apply keyword overrides; overrides win."""
    values = {}
    if path is not None:
        raw = parse_config_text(Path(path).read_text())
        values = {k: _coerce(k, v) for k, v in raw.items()}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


SWEEP_KEYS = ("target", "n_points", "delta_rel", "method", "seed")


def expand_sweep(path=None, **overrides) -> list[ExperimentConfig]:
    """Cartesian product over comma-separated values of the sweep keys.

    Overrides may be strings (comma lists allowed) or plain values.
    """
    raw = parse_config_text(Path(path).read_text()) if path is not None else {}
    raw.update({k: str(v) for k, v in overrides.items() if v is not None})
    axes = []
    for key in SWEEP_KEYS:
        if key in raw:
            axes.append((key, [v for v in raw.pop(key).split(",") if v.strip()]))
    base = {k: _coerce(k, v) for k, v in raw.items()}
    configs = [base]
    for key, options in axes:
        configs = [{**cfg, key: _coerce(key, opt)} for cfg in configs for opt in options]
    return [ExperimentConfig(**cfg) for cfg in configs]
