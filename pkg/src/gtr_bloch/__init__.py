"""Sequential yes/no measurements in the extended Bloch (tension-reduction) model.

A state is a point on the unit sphere; each measurement is an elastic between
two antipodal anchors that breaks according to a density on [-1, 1]. A
uniform density reproduces Born probabilities; other densities produce
non-Hilbertian order and replicability effects.
"""

from .density import LocallyUniform, PiecewiseConstant, Uniform, cdf, integrate, inverse_cdf, pdf_at
from .effects import EffectsReport, effects_report, order_effect_deltas, qq_value
from .geometry import MeasurementAxis, ScenarioGeometry, UnitVector3, from_spherical, gram_realizable, landing_coordinate, normalize
from .measurement import DichotomicMeasurement, OutcomeLabel, Scenario, born_probabilities, outcome_probabilities, post_state
from .sequential import ProbabilityTable, SequenceSpec, conditional_probabilities, sequence_distribution

__all__ = [
    "DichotomicMeasurement",
    "EffectsReport",
    "LocallyUniform",
    "MeasurementAxis",
    "OutcomeLabel",
    "PiecewiseConstant",
    "ProbabilityTable",
    "Scenario",
    "ScenarioGeometry",
    "SequenceSpec",
    "Uniform",
    "UnitVector3",
    "born_probabilities",
    "cdf",
    "conditional_probabilities",
    "effects_report",
    "from_spherical",
    "gram_realizable",
    "integrate",
    "inverse_cdf",
    "landing_coordinate",
    "normalize",
    "order_effect_deltas",
    "outcome_probabilities",
    "pdf_at",
    "post_state",
    "qq_value",
    "sequence_distribution",
]

__version__ = "0.1.0"
