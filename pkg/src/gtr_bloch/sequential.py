"""Outcome distributions of measurement sequences by the product rule.

Each step after the first starts from the anchor the previous outcome
collapsed to and uses the density conditioned on that outcome only.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import ConstructionError, MissingContextError, StructuralError
from .measurement import (
    ANSWERS,
    INITIAL,
    NO,
    YES,
    DichotomicMeasurement,
    OutcomeLabel,
    Scenario,
    outcome_probabilities,
    post_state,
)
from . import density as _density
from .geometry import landing_coordinate

SUM_TOL = 1e-10


@dataclass(frozen=True)
class SequenceSpec:
    steps: tuple

    def __post_init__(self):
        steps = tuple(self.steps)
        if not steps:
            raise ConstructionError("a sequence needs at least one step", field="steps")
        for s in steps:
            if not isinstance(s, str) or not s or ":" in s or "," in s:
                raise ConstructionError(f"invalid measurement id {s!r} in sequence", field="steps")
        object.__setattr__(self, "steps", steps)

    @classmethod
    def parse(cls, text: str) -> SequenceSpec:
        return cls(tuple(t.strip() for t in text.split(",")))

    def __str__(self) -> str:
        return ",".join(self.steps)

    def __len__(self) -> int:
        return len(self.steps)


def outcome_key(steps: Iterable[str], answers: Iterable[str]) -> str:
    return ",".join(f"{m}:{a}" for m, a in zip(steps, answers))


def outcome_keys(steps: tuple) -> list:
    """All outcome strings of ``steps`` with yes before no, first step slowest."""
    return [outcome_key(steps, answers) for answers in itertools.product(ANSWERS, repeat=len(steps))]


def parse_outcome_key(key: str) -> tuple:
    return tuple(OutcomeLabel.parse(tok) for tok in key.split(","))


class ProbabilityTable:
    """Probabilities of every outcome string of one measurement sequence."""

    def __init__(self, steps, entries: Mapping[str, float]):
        steps = tuple(steps)
        keys = outcome_keys(steps)
        if set(entries) != set(keys):
            missing = sorted(set(keys) - set(entries))
            extra = sorted(set(entries) - set(keys))
            raise StructuralError(
                f"table for sequence {','.join(steps)!r} has missing keys {missing} / unexpected keys {extra}"
            )
        values = {}
        for k in keys:
            p = float(entries[k])
            if not (0.0 <= p <= 1.0) or math.isnan(p):
                raise StructuralError(f"probability of {k!r} is {p!r}, outside [0, 1]")
            values[k] = p
        total = math.fsum(values.values())
        if abs(total - 1.0) > SUM_TOL:
            raise StructuralError(f"table entries sum to {total!r}, not 1")
        self.steps = steps
        self._entries = values

    @classmethod
    def from_entries(cls, entries: Mapping[str, float]) -> ProbabilityTable:
        """Build a table inferring the sequence from the outcome strings."""
        if not entries:
            raise StructuralError("empty probability table")
        first = parse_outcome_key(next(iter(entries)))
        return cls(tuple(label.measurement_id for label in first), entries)

    @property
    def entries(self) -> dict:
        return dict(self._entries)

    def __getitem__(self, key: str) -> float:
        return self._entries[key]

    def prob(self, *answers: str) -> float:
        return self._entries[outcome_key(self.steps, answers)]

    def keys(self):
        return self._entries.keys()

    def items(self):
        return self._entries.items()

    def __len__(self):
        return len(self._entries)

    def __eq__(self, other):
        if not isinstance(other, ProbabilityTable):
            return NotImplemented
        return self.steps == other.steps and self._entries == other._entries

    def __repr__(self):
        return f"ProbabilityTable({','.join(self.steps)!r}, {self._entries!r})"

    def to_dict(self) -> dict:
        return dict(self._entries)


def required_contexts(scenario: Scenario, seq: SequenceSpec) -> list:
    """(measurement id, context key) pairs the sequence will look up, in order of first use."""
    needed = []
    for i, mid in enumerate(seq.steps):
        scenario.measurement(mid)
        keys = [INITIAL] if i == 0 else [f"{seq.steps[i - 1]}:{a}" for a in ANSWERS]
        for key in keys:
            if (mid, key) not in needed:
                needed.append((mid, key))
    return needed


def validate_sequence(scenario: Scenario, seq: SequenceSpec) -> None:
    """Fail before any computation if a step or a conditional density is missing."""
    for mid in seq.steps:
        if mid not in scenario.ids:
            raise MissingContextError(mid, INITIAL, f"scenario has no measurement {mid!r}")
    missing = []
    for mid, key in required_contexts(scenario, seq):
        try:
            scenario.density(mid, key)
        except MissingContextError:
            missing.append(f"{mid}|{key}")
    if missing:
        first_mid, first_key = missing[0].split("|", 1)
        raise MissingContextError(
            first_mid,
            first_key,
            "sequence {} needs densities that are not defined: {}".format(seq, ", ".join(missing)),
        )


def conditional_probabilities(
    prior: OutcomeLabel, m: DichotomicMeasurement, scenario: Scenario
) -> tuple[float, float]:
    """(p_yes, p_no) of ``m`` right after ``prior`` was obtained."""
    prior_m = scenario.measurement(prior.measurement_id)
    state = post_state(prior_m, prior.answer)
    rho = scenario.density(m.id, prior.key)
    c = landing_coordinate(state, m.axis)
    return (_density.integrate(rho, -1.0, c), _density.integrate(rho, c, 1.0))


def sequence_distribution(scenario: Scenario, seq: SequenceSpec) -> ProbabilityTable:
    validate_sequence(scenario, seq)
    steps = seq.steps
    entries = {}

    def walk(i, prefix, prob, prior):
        m = scenario.measurement(steps[i])
        if prior is None:
            p_yes, p_no = outcome_probabilities(scenario.initial_state, m, INITIAL)
        else:
            p_yes, p_no = conditional_probabilities(prior, m, scenario)
        for answer, p in ((YES, p_yes), (NO, p_no)):
            answers = prefix + (answer,)
            if i + 1 == len(steps):
                entries[outcome_key(steps, answers)] = prob * p
            else:
                walk(i + 1, answers, prob * p, OutcomeLabel(m.id, answer))

    walk(0, (), 1.0, None)
    return ProbabilityTable(steps, entries)
