"""Question order effects, the QQ equality and response replicability."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StructuralError
from .measurement import ANSWERS, NO, YES, Scenario
from .montecarlo import EmpiricalTable, RunConfig, simulate_sequence
from .sequential import ProbabilityTable, SequenceSpec, outcome_key, sequence_distribution

ANALYTIC_TOL = 1e-9
ADJACENT_TOL = 1e-12
EMPIRICAL_SIGMAS = 4.0


def _table(t) -> ProbabilityTable:
    return t.table if isinstance(t, EmpiricalTable) else t


def _pair(table_AB, table_BA) -> tuple:
    ab, ba = _table(table_AB), _table(table_BA)
    if len(ab.steps) != 2 or len(ba.steps) != 2:
        raise StructuralError("order effects need two-step tables")
    if ab.steps != ba.steps[::-1]:
        raise StructuralError(
            f"tables are over {','.join(ab.steps)!r} and {','.join(ba.steps)!r}, not opposite orders"
        )
    return ab, ba


def order_effect_deltas(table_AB, table_BA) -> dict:
    """{(i, j): p(A_i B_j) - p(B_j A_i)} for i, j in yes/no."""
    ab, ba = _pair(table_AB, table_BA)
    return {(i, j): ab.prob(i, j) - ba.prob(j, i) for i in ANSWERS for j in ANSWERS}


def qq_value(table_AB, table_BA) -> float:
    """p(AyBy) - p(ByAy) + p(AnBn) - p(BnAn); zero for every Born-rule model."""
    d = order_effect_deltas(table_AB, table_BA)
    return d[(YES, YES)] + d[(NO, NO)]


def qq_stderr(table_AB: EmpiricalTable, table_BA: EmpiricalTable) -> float:
    """Standard error of the empirical QQ value for independent AB and BA runs.

    Each diagonal sum is one multinomial cell pair, so it is a Bernoulli frequency.
    """
    s_ab = table_AB.prob(YES, YES) + table_AB.prob(NO, NO)
    s_ba = table_BA.prob(YES, YES) + table_BA.prob(NO, NO)
    return math.sqrt(s_ab * (1 - s_ab) / table_AB.n + s_ba * (1 - s_ba) / table_BA.n)


def delta_stderrs(table_AB: EmpiricalTable, table_BA: EmpiricalTable) -> dict:
    out = {}
    for i in ANSWERS:
        for j in ANSWERS:
            a = table_AB.estimates[outcome_key(table_AB.steps, (i, j))].stderr
            b = table_BA.estimates[outcome_key(table_BA.steps, (j, i))].stderr
            out[(i, j)] = math.hypot(a, b)
    return out


@dataclass
class EffectsReport:
    qq_value: float
    order_deltas: dict
    adjacent_replicability: dict
    separated_replicability_probs: dict
    separated_conditional: dict
    order_effect_present: bool
    table_AB: ProbabilityTable
    table_BA: ProbabilityTable
    mode: str = "analytic"
    qq_stderr: float | None = None
    samples: int | None = None

    def to_dict(self) -> dict:
        out = {
            "qq": self.qq_value,
            "deltas": {f"{i},{j}": v for (i, j), v in self.order_deltas.items()},
            "adjacent": dict(self.adjacent_replicability),
            "separated": dict(self.separated_replicability_probs),
            "separated_conditional": dict(self.separated_conditional),
            "order_effect": self.order_effect_present,
            "mode": self.mode,
            "tables": {
                ",".join(self.table_AB.steps): self.table_AB.to_dict(),
                ",".join(self.table_BA.steps): self.table_BA.to_dict(),
            },
        }
        if self.qq_stderr is not None:
            out["qq_stderr"] = self.qq_stderr
            out["samples"] = self.samples
        return out


def _replicability(tables: dict, a: str, b: str) -> tuple:
    adjacent = {}
    for mid in (a, b):
        t = _table(tables[f"{mid},{mid}"])
        off = max(t.prob(YES, NO), t.prob(NO, YES))
        adjacent[mid] = bool(off < ADJACENT_TOL)
    separated, conditional = {}, {}
    for first, second in ((a, b), (b, a)):
        three = _table(tables[f"{first},{second},{first}"])
        for i in ANSWERS:
            for j in ANSWERS:
                key = outcome_key((first, second, first), (i, j, i))
                joint = three[key]
                reached = three[key] + three[outcome_key((first, second, first), (i, j, _other(i)))]
                separated[key] = joint
                conditional[key] = joint / reached if reached > 0 else None
    return adjacent, separated, conditional


def _other(answer: str) -> str:
    return NO if answer == YES else YES


def replicability_report(scenario: Scenario, A_id: str, B_id: str) -> tuple:
    """(adjacent flags, separated joint probabilities, separated conditionals) from analytic tables."""
    tables = {
        str(s): sequence_distribution(scenario, s)
        for s in _replicability_sequences(A_id, B_id)
    }
    return _replicability(tables, A_id, B_id)


def _replicability_sequences(a: str, b: str) -> list:
    return [SequenceSpec((a, a)), SequenceSpec((b, b)), SequenceSpec((a, b, a)), SequenceSpec((b, a, b))]


def effects_report(scenario: Scenario, A_id: str, B_id: str) -> EffectsReport:
    ab = sequence_distribution(scenario, SequenceSpec((A_id, B_id)))
    ba = sequence_distribution(scenario, SequenceSpec((B_id, A_id)))
    deltas = order_effect_deltas(ab, ba)
    adjacent, separated, conditional = replicability_report(scenario, A_id, B_id)
    return EffectsReport(
        qq_value=deltas[(YES, YES)] + deltas[(NO, NO)],
        order_deltas=deltas,
        adjacent_replicability=adjacent,
        separated_replicability_probs=separated,
        separated_conditional=conditional,
        order_effect_present=any(abs(v) > ANALYTIC_TOL for v in deltas.values()),
        table_AB=ab,
        table_BA=ba,
    )


def derived_seed(seed: int, index: int) -> int:
    """Independent 64-bit seed for the ``index``-th simulated table of one report."""
    state = np.random.SeedSequence(seed, spawn_key=(0xEFFEC7, index)).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def empirical_effects_report(
    scenario: Scenario, A_id: str, B_id: str, config: RunConfig, threads: int | None = None
) -> EffectsReport:
    seqs = [SequenceSpec((A_id, B_id)), SequenceSpec((B_id, A_id))] + _replicability_sequences(A_id, B_id)
    tables = {}
    for index, seq in enumerate(seqs):
        cfg = RunConfig(config.samples, derived_seed(config.seed, index), config.chunk_size)
        tables[str(seq)] = simulate_sequence(scenario, seq, cfg, threads=threads)
    ab, ba = tables[str(seqs[0])], tables[str(seqs[1])]
    deltas = order_effect_deltas(ab, ba)
    errs = delta_stderrs(ab, ba)
    adjacent, separated, conditional = _replicability(tables, A_id, B_id)
    return EffectsReport(
        qq_value=deltas[(YES, YES)] + deltas[(NO, NO)],
        order_deltas=deltas,
        adjacent_replicability=adjacent,
        separated_replicability_probs=separated,
        separated_conditional=conditional,
        order_effect_present=any(abs(deltas[k]) > EMPIRICAL_SIGMAS * errs[k] for k in deltas),
        table_AB=ab.table,
        table_BA=ba.table,
        mode="empirical",
        qq_stderr=qq_stderr(ab, ba),
        samples=config.samples,
    )
