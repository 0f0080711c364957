"""Points on the unit sphere, measurement axes and landing coordinates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, DomainError

NORM_TOL = 1e-9
GRAM_TOL = 1e-10


@dataclass(frozen=True)
class UnitVector3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not math.isfinite(norm) or abs(norm - 1.0) > NORM_TOL:
            raise ConstructionError(f"vector {self.as_tuple()} is not unit-norm (norm={norm!r})")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def dot(self, other: UnitVector3) -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def __neg__(self) -> UnitVector3:
        return UnitVector3(-self.x, -self.y, -self.z)


def normalize(v) -> UnitVector3:
    """Scale a 3-vector to unit length."""
    x, y, z = (float(c) for c in v)
    norm = math.sqrt(x * x + y * y + z * z)
    if norm == 0.0 or not math.isfinite(norm):
        raise ConstructionError(f"cannot normalize vector {(x, y, z)!r}")
    if abs(norm - 1.0) <= 1e-15:
        # already unit up to rounding; leave untouched so normalizing is idempotent
        return UnitVector3(x, y, z)
    return UnitVector3(x / norm, y / norm, z / norm)


def from_spherical(polar: float, azimuth: float) -> UnitVector3:
    s = math.sin(polar)
    return UnitVector3(s * math.cos(azimuth), s * math.sin(azimuth), math.cos(polar))


@dataclass(frozen=True)
class MeasurementAxis:
    """Elastic stretched between ``yes_anchor`` and its antipode."""

    yes_anchor: UnitVector3

    def no_anchor(self) -> UnitVector3:
        return -self.yes_anchor

    def swapped(self) -> MeasurementAxis:
        return MeasurementAxis(self.no_anchor())


def _clamp(c: float) -> float:
    return min(1.0, max(-1.0, c))


def landing_coordinate(state: UnitVector3, axis: MeasurementAxis) -> float:
    """Coordinate in [-1, 1] where ``state`` falls orthogonally onto the elastic.

    A state sitting exactly on an anchor lands on the end point exactly, so a
    repeated measurement never leaks rounding mass to the opposite outcome.
    """
    a = axis.yes_anchor
    if state == a:
        return 1.0
    if state.as_tuple() == (-a.x, -a.y, -a.z):
        return -1.0
    return _clamp(state.dot(a))


def _check_cosine(name: str, value: float) -> float:
    value = float(value)
    if not (-1.0 <= value <= 1.0):
        raise DomainError(f"{name}={value!r} outside [-1, 1]")
    return value


def gram_violation(cos_theta_A: float, cos_theta_B: float, cos_theta: float) -> float:
    """Distance of the cosine triple's Gram matrix from the PSD cone (0 when realizable)."""
    cA, cB, c = cos_theta_A, cos_theta_B, cos_theta
    gram = np.array([[1.0, cA, cB], [cA, 1.0, c], [cB, c, 1.0]])
    return max(0.0, -float(np.linalg.eigvalsh(gram)[0]))


def gram_realizable(cos_theta_A: float, cos_theta_B: float, cos_theta: float) -> bool:
    """True iff the three cosines can be realized by actual unit vectors.

    The triple is (state . a_y, state . b_y, a_y . b_y).
    """
    cA = _check_cosine("cos_theta_A", cos_theta_A)
    cB = _check_cosine("cos_theta_B", cos_theta_B)
    c = _check_cosine("cos_theta", cos_theta)
    minor2 = 1.0 - cA * cA
    det = 1.0 + 2.0 * cA * cB * c - cA * cA - cB * cB - c * c
    # 1x1 minors are 1; the remaining principal 2x2 minors are nonnegative for cosines
    return minor2 >= -GRAM_TOL and det >= -GRAM_TOL


@dataclass(frozen=True)
class ScenarioGeometry:
    """Cosines of the three angles between the state and the two yes-anchors."""

    cos_theta_A: float
    cos_theta_B: float
    cos_theta: float

    def __post_init__(self):
        for name in ("cos_theta_A", "cos_theta_B", "cos_theta"):
            object.__setattr__(self, name, _check_cosine(name, getattr(self, name)))
        if not gram_realizable(self.cos_theta_A, self.cos_theta_B, self.cos_theta):
            raise ConstructionError(
                f"cosines {self.as_tuple()} are not realizable by unit vectors"
            )

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.cos_theta_A, self.cos_theta_B, self.cos_theta)

    def vectors(self) -> tuple[UnitVector3, UnitVector3, UnitVector3]:
        """Concrete (state, a_y, b_y) with exactly these pairwise cosines.

        a_y is placed on the x axis and b_y in the xy plane, so the cosines
        involving a_y are reproduced exactly.
        """
        cA, cB, c = self.as_tuple()
        s = math.sqrt(max(0.0, 1.0 - c * c))
        a_y = UnitVector3(1.0, 0.0, 0.0)
        b_y = UnitVector3(c, s, 0.0)
        if s > 1e-12:
            y = (cB - c * cA) / s
        else:
            y = math.sqrt(max(0.0, 1.0 - cA * cA))
        z2 = 1.0 - cA * cA - y * y
        if z2 >= 0.0:
            state = UnitVector3(cA, y, math.sqrt(z2))
        else:
            # triple on the PSD boundary within tolerance
            state = normalize((cA, y, 0.0))
        return state, a_y, b_y


def cosines_of(state: UnitVector3, a_y: UnitVector3, b_y: UnitVector3) -> ScenarioGeometry:
    return ScenarioGeometry(_clamp(state.dot(a_y)), _clamp(state.dot(b_y)), _clamp(a_y.dot(b_y)))
