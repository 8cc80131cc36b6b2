"""Seeded Gaussian noise scaled to an exact relative level."""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError
from ..hilbert import GridFunction, norm

__all__ = ["NoiseModel", "make_noisy_rhs"]


class NoiseModel:
    """Standard-normal nodal noise from numpy's PCG64 ``default_rng(seed)``.

    The generator choice is part of the reproducibility contract: the same
    seed and grid size always produce the same noise vector.
    """

    def __init__(self, seed: int = 0):
        if int(seed) != seed or seed < 0:
            raise ParameterError(f"seed must be a nonnegative integer, got {seed!r}")
        self.seed = int(seed)

    def draw(self, n: int, attempt: int = 0) -> np.ndarray:
        rng = np.random.default_rng([self.seed, attempt] if attempt else self.seed)
        return rng.standard_normal(n)


def make_noisy_rhs(f: GridFunction, delta_rel: float, seed: int = 0) -> tuple[GridFunction, float]:
    """Return ``(f + kappa * noise, delta)`` with ``||f_delta - f|| = delta = delta_rel ||f||``."""
    if not delta_rel >= 0:
        raise ParameterError(f"delta_rel must be nonnegative, got {delta_rel}")
    f_norm = norm(f)
    if f_norm == 0:
        raise ParameterError("cannot scale relative noise for f = 0")
    if delta_rel == 0:
        return f, 0.0
    model = NoiseModel(seed)
    delta = delta_rel * f_norm
    for attempt in range(2):
        noise = GridFunction(f.grid, model.draw(f.grid.n_points, attempt))
        noise_norm = norm(noise)
        if noise_norm > 0:
            break
    else:
        raise ParameterError("noise vector has zero norm twice in a row")
    return f + (delta / noise_norm) * noise, delta
