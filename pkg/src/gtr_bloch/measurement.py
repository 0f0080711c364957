"""Single dichotomic measurements and the scenarios that group them."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from . import density as _density
from .errors import ConstructionError, DomainError, MissingContextError
from .geometry import MeasurementAxis, ScenarioGeometry, UnitVector3, landing_coordinate

YES = "yes"
NO = "no"
ANSWERS = (YES, NO)
INITIAL = "initial"


@dataclass(frozen=True)
class OutcomeLabel:
    measurement_id: str
    answer: str

    def __post_init__(self):
        if not self.measurement_id:
            raise ConstructionError("measurement_id must be nonempty", field="measurement_id")
        if self.answer not in ANSWERS:
            raise ConstructionError(f"answer must be 'yes' or 'no', got {self.answer!r}", field="answer")

    @property
    def key(self) -> str:
        """Context key under which later measurements look up their density, e.g. ``"A:yes"``."""
        return f"{self.measurement_id}:{self.answer}"

    @classmethod
    def parse(cls, token: str) -> OutcomeLabel:
        mid, sep, answer = token.rpartition(":")
        if not sep:
            raise ConstructionError(f"outcome token {token!r} is not of the form 'id:answer'")
        return cls(mid, answer)

    def __str__(self) -> str:
        return self.key


def _check_context_key(key: str) -> None:
    if key == INITIAL:
        return
    OutcomeLabel.parse(key)


@dataclass(frozen=True, eq=False)
class DichotomicMeasurement:
    """A yes/no measurement: an axis plus one break density per prior context.

    ``densities`` maps ``"initial"`` (the first measurement of a sequence) or
    an outcome key such as ``"B:no"`` (the outcome just obtained) to the
    density actualized in that situation.
    """

    id: str
    axis: MeasurementAxis
    densities: Mapping[str, _density.BreakDensity] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id or ":" in self.id or "," in self.id:
            raise ConstructionError(f"invalid measurement id {self.id!r}", field="id")
        dens = dict(self.densities)
        if INITIAL not in dens:
            raise ConstructionError(
                f"measurement {self.id!r} lacks the required 'initial' density", field="densities"
            )
        for key, rho in dens.items():
            _check_context_key(key)
            if not isinstance(rho, (_density.Uniform, _density.LocallyUniform, _density.PiecewiseConstant)):
                raise ConstructionError(f"density for context {key!r} is not a BreakDensity", field="densities")
        object.__setattr__(self, "densities", MappingProxyType(dens))

    def __eq__(self, other):
        if not isinstance(other, DichotomicMeasurement):
            return NotImplemented
        return self.id == other.id and self.axis == other.axis and dict(self.densities) == dict(other.densities)

    def density_for(self, context_key: str, fallback: bool = False) -> _density.BreakDensity:
        try:
            return self.densities[context_key]
        except KeyError:
            if fallback:
                return self.densities[INITIAL]
            raise MissingContextError(self.id, context_key) from None


@dataclass(frozen=True, eq=False)
class Scenario:
    """An initial state and the measurements that may be applied to it.

    ``geometry`` is kept when the scenario was built from a cosine triple, so
    it can be re-emitted and re-parameterized in that form.
    """

    initial_state: UnitVector3
    measurements: tuple
    default_to_initial: bool = False
    geometry: ScenarioGeometry | None = None

    def __post_init__(self):
        ms = tuple(self.measurements)
        if not ms:
            raise ConstructionError("a scenario needs at least one measurement", field="measurements")
        ids = [m.id for m in ms]
        dup = {i for i in ids if ids.count(i) > 1}
        if dup:
            raise ConstructionError(f"duplicate measurement ids {sorted(dup)}", field="measurements")
        object.__setattr__(self, "measurements", ms)
        object.__setattr__(self, "_by_id", {m.id: m for m in ms})

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.initial_state == other.initial_state
            and self.measurements == other.measurements
            and self.default_to_initial == other.default_to_initial
            and self.geometry == other.geometry
        )

    @property
    def ids(self) -> tuple:
        return tuple(m.id for m in self.measurements)

    def measurement(self, measurement_id: str) -> DichotomicMeasurement:
        try:
            return self._by_id[measurement_id]
        except KeyError:
            raise MissingContextError(
                measurement_id, INITIAL, f"scenario has no measurement {measurement_id!r}"
            ) from None

    def density(self, measurement_id: str, context_key: str) -> _density.BreakDensity:
        """Density of ``measurement_id`` given the preceding outcome ``context_key``.

        Repeating a measurement lands exactly on an anchor, where every
        density gives the same answer, so a missing self-context is filled
        with the initial density.
        """
        m = self.measurement(measurement_id)
        self_repeat = context_key != INITIAL and OutcomeLabel.parse(context_key).measurement_id == m.id
        return m.density_for(context_key, fallback=self.default_to_initial or self_repeat)

    @classmethod
    def from_cosines(
        cls,
        geometry: ScenarioGeometry,
        densities_A: Mapping,
        densities_B: Mapping,
        ids: tuple = ("A", "B"),
        default_to_initial: bool = False,
    ) -> Scenario:
        state, a_y, b_y = geometry.vectors()
        return cls(
            state,
            (
                DichotomicMeasurement(ids[0], MeasurementAxis(a_y), densities_A),
                DichotomicMeasurement(ids[1], MeasurementAxis(b_y), densities_B),
            ),
            default_to_initial,
            geometry,
        )


def born_probabilities(cos_theta: float) -> tuple[float, float]:
    """Yes/no probabilities under a uniform break density."""
    c = float(cos_theta)
    if not (-1.0 <= c <= 1.0):
        raise DomainError(f"cos_theta={c!r} outside [-1, 1]")
    return ((1.0 + c) / 2.0, (1.0 - c) / 2.0)


def outcome_probabilities(
    state: UnitVector3, m: DichotomicMeasurement, context_key: str = INITIAL
) -> tuple[float, float]:
    """Yes/no transition probabilities of ``m`` on ``state``.

    "yes" happens when the elastic breaks below the landing coordinate, so the
    yes-anchored fragment carries the particle.
    """
    rho = m.density_for(context_key)
    c = landing_coordinate(state, m.axis)
    return (_density.integrate(rho, -1.0, c), _density.integrate(rho, c, 1.0))


def post_state(m: DichotomicMeasurement, answer: str) -> UnitVector3:
    if answer == YES:
        return m.axis.yes_anchor
    if answer == NO:
        return m.axis.no_anchor()
    raise DomainError(f"answer must be 'yes' or 'no', got {answer!r}")
