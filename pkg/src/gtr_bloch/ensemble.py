"""Averaging yes-probabilities over random break densities.

Densities are piecewise constant on ``n`` equal cells with weights uniform on
the probability simplex; ``n`` itself is drawn uniformly from
1..``max_cells`` for every trial. Trial ``t`` uses its own generator derived
from the master seed, so results do not depend on how trials are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import density as _density
from .errors import ConstructionError, DomainError
from .montecarlo import Estimate, check_seed, default_threads, substream

TRIALS_PER_TASK = 1024


@dataclass(frozen=True)
class EnsembleConfig:
    trials: int
    max_cells: int
    seed: int

    def __post_init__(self):
        if int(self.trials) < 1:
            raise ConstructionError("trials must be >= 1", field="trials")
        if int(self.max_cells) < 1:
            raise ConstructionError("max_cells must be >= 1", field="max_cells")
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "max_cells", int(self.max_cells))
        object.__setattr__(self, "seed", check_seed(self.seed))


def sample_random_density(n_cells: int, rng: np.random.Generator) -> _density.PiecewiseConstant:
    if n_cells < 1:
        raise ConstructionError(f"n_cells must be >= 1, got {n_cells!r}")
    breakpoints = np.linspace(-1.0, 1.0, n_cells + 1)
    breakpoints[0], breakpoints[-1] = -1.0, 1.0
    draws = rng.standard_exponential(n_cells)
    return _density.PiecewiseConstant(tuple(breakpoints), tuple(draws / draws.sum()))


def _trial(cos_theta: float, config: EnsembleConfig, t: int) -> float:
    rng = substream(config.seed, t)
    n_cells = int(rng.integers(1, config.max_cells, endpoint=True))
    rho = sample_random_density(n_cells, rng)
    return _density.integrate(rho, -1.0, cos_theta)


def trial_probabilities(cos_theta: float, config: EnsembleConfig, threads: int | None = None) -> np.ndarray:
    """Per-trial yes-probabilities, in trial order."""
    c = float(cos_theta)
    if not (-1.0 <= c <= 1.0):
        raise DomainError(f"cos_theta={c!r} outside [-1, 1]")
    starts = range(0, config.trials, TRIALS_PER_TASK)

    def task(start):
        stop = min(start + TRIALS_PER_TASK, config.trials)
        return [_trial(c, config, t) for t in range(start, stop)]

    workers = max(1, min(threads or default_threads(), len(starts)))
    if workers == 1:
        parts = [task(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(task, starts))
    return np.array([p for part in parts for p in part])


def universal_average_probability(
    cos_theta: float, config: EnsembleConfig, threads: int | None = None
) -> Estimate:
    """Mean yes-probability over the random-density ensemble, with its standard error."""
    p = trial_probabilities(cos_theta, config, threads)
    n = len(p)
    if p.min() == p.max():
        # degenerate ensemble (cos_theta = +-1 or max_cells = 1): no rounding noise
        return Estimate(float(p[0]), 0.0, n)
    mean = math.fsum(p) / n
    stderr = float(np.std(p, ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    return Estimate(mean, stderr, n)
