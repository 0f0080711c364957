"""Sampling the hidden break point to estimate outcome frequencies.

Samples are split into chunks of ``chunk_size``. Chunk ``i`` draws from its
own generator seeded by ``SeedSequence(seed, spawn_key=(i,))``, and chunk
results are integer counts, so output is identical for any number of worker
threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError
from .geometry import UnitVector3, landing_coordinate
from .measurement import ANSWERS, INITIAL, NO, YES, DichotomicMeasurement, OutcomeLabel, Scenario, post_state
from .sequential import ProbabilityTable, SequenceSpec, outcome_keys, validate_sequence

MAX_SEED = 2**64 - 1


def default_threads() -> int:
    """Worker count: ``GTR_THREADS`` if set, else the machine's CPU count."""
    env = os.environ.get("GTR_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConstructionError(f"GTR_THREADS={env!r} is not an integer") from None
        if n < 1:
            raise ConstructionError(f"GTR_THREADS={env!r} must be positive")
        return n
    return os.cpu_count() or 1


def substream(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed <= MAX_SEED:
        raise ConstructionError(f"seed must be an unsigned 64-bit integer, got {seed!r}", field="seed")
    return int(seed)


@dataclass(frozen=True)
class RunConfig:
    samples: int
    seed: int
    chunk_size: int = 1 << 16

    def __post_init__(self):
        if int(self.samples) < 1:
            raise ConstructionError("samples must be >= 1", field="samples")
        if int(self.chunk_size) < 1:
            raise ConstructionError("chunk_size must be >= 1", field="chunk_size")
        object.__setattr__(self, "samples", int(self.samples))
        object.__setattr__(self, "chunk_size", int(self.chunk_size))
        object.__setattr__(self, "seed", check_seed(self.seed))

    def chunks(self) -> list:
        full, rest = divmod(self.samples, self.chunk_size)
        return [self.chunk_size] * full + ([rest] if rest else [])


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n: int

    @classmethod
    def from_count(cls, hits: int, n: int) -> Estimate:
        p = hits / n
        return cls(p, math.sqrt(p * (1.0 - p) / n), n)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n}


@dataclass(frozen=True)
class EmpiricalTable:
    """Frequencies of a simulated sequence, with the raw counts behind them."""

    table: ProbabilityTable
    estimates: dict
    counts: dict
    n: int

    @property
    def steps(self) -> tuple:
        return self.table.steps

    def __getitem__(self, key: str) -> float:
        return self.table[key]

    def prob(self, *answers: str) -> float:
        return self.table.prob(*answers)


def _decide(lam, c, coin):
    """Yes iff the break lies below the landing point; exact ties go to a fair coin."""
    return (lam < c) | ((lam == c) & (coin < 0.5))


def simulate_single(
    state: UnitVector3, m: DichotomicMeasurement, context_key: str, rng
) -> OutcomeLabel:
    """One run of the measurement cascade. ``rng`` must provide ``random()``."""
    rho = m.density_for(context_key)
    c = landing_coordinate(state, m.axis)
    lam = float(rho.inverse_cdf_array(rng.random()))
    if lam < c:
        return OutcomeLabel(m.id, YES)
    if lam > c:
        return OutcomeLabel(m.id, NO)
    return OutcomeLabel(m.id, YES if rng.random() < 0.5 else NO)


def _plan(scenario: Scenario, seq: SequenceSpec) -> list:
    """Per step, the (density, landing coordinate) for each possible prior outcome."""
    plan = []
    for i, mid in enumerate(seq.steps):
        m = scenario.measurement(mid)
        if i == 0:
            rho = scenario.density(mid, INITIAL)
            plan.append([(rho, landing_coordinate(scenario.initial_state, m.axis))])
            continue
        prev = scenario.measurement(seq.steps[i - 1])
        branches = []
        for answer in ANSWERS:
            rho = scenario.density(mid, f"{prev.id}:{answer}")
            branches.append((rho, landing_coordinate(post_state(prev, answer), m.axis)))
        plan.append(branches)
    return plan


def _run_chunk(plan: list, n: int, rng: np.random.Generator) -> np.ndarray:
    code = np.zeros(n, dtype=np.int64)
    last_no = None
    for i, branches in enumerate(plan):
        u = rng.random(n)
        coin = rng.random(n)
        if i == 0:
            rho, c = branches[0]
            yes = _decide(rho.inverse_cdf_array(u), c, coin)
        else:
            yes = np.empty(n, dtype=bool)
            for branch, mask in ((0, ~last_no), (1, last_no)):
                if not mask.any():
                    continue
                rho, c = branches[branch]
                yes[mask] = _decide(rho.inverse_cdf_array(u[mask]), c, coin[mask])
        last_no = ~yes
        code = code * 2 + last_no
    return np.bincount(code, minlength=2 ** len(plan))


def simulate_sequence(
    scenario: Scenario, seq: SequenceSpec, config: RunConfig, threads: int | None = None
) -> EmpiricalTable:
    validate_sequence(scenario, seq)
    plan = _plan(scenario, seq)
    sizes = config.chunks()
    workers = max(1, min(threads or default_threads(), len(sizes)))

    def job(index):
        return _run_chunk(plan, sizes[index], substream(config.seed, index))

    if workers == 1:
        results = [job(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(len(sizes))))
    totals = np.sum(results, axis=0)

    n = config.samples
    keys = outcome_keys(seq.steps)
    counts = {k: int(totals[i]) for i, k in enumerate(keys)}
    table = ProbabilityTable(seq.steps, {k: counts[k] / n for k in keys})
    estimates = {k: Estimate.from_count(counts[k], n) for k in keys}
    return EmpiricalTable(table, estimates, counts, n)
