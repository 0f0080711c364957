"""Break-point densities on the elastic coordinate [-1, 1].

Three families are provided, all with closed-form (piecewise-linear) CDFs:

* ``Uniform``: rho(x) = 1/2, the case that reproduces Born probabilities;
* ``LocallyUniform``: constant on [center - half_width, center + half_width];
* ``PiecewiseConstant``: arbitrary cell masses on an arbitrary partition.

The class methods ``cdf_array`` / ``inverse_cdf_array`` work on numpy arrays
without domain checks and are what the Monte Carlo engine calls in bulk. The
module-level functions are the checked scalar API.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConstructionError, DomainError, ValidationError

WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Uniform:
    kind = "uniform"

    def pdf_array(self, x):
        return np.full_like(np.asarray(x, dtype=float), 0.5)

    def cdf_array(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 1.0, 1.0, (x + 1.0) / 2.0)

    def cdf_scalar(self, x: float) -> float:
        return 1.0 if x >= 1.0 else (x + 1.0) / 2.0

    def inverse_cdf_array(self, u):
        return 2.0 * np.asarray(u, dtype=float) - 1.0

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class LocallyUniform:
    center: float
    half_width: float
    kind = "locally_uniform"

    def __post_init__(self):
        d, e = float(self.center), float(self.half_width)
        object.__setattr__(self, "center", d)
        object.__setattr__(self, "half_width", e)
        if not (math.isfinite(d) and -1.0 < d < 1.0):
            raise ConstructionError(f"center {d!r} must lie in (-1, 1)", field="center")
        if not (math.isfinite(e) and e > 0.0):
            raise ConstructionError(f"half_width {e!r} must be positive", field="half_width")
        if d - e < -1.0 or d + e > 1.0:
            raise ConstructionError(
                f"support [{d - e!r}, {d + e!r}] does not fit inside [-1, 1]", field="half_width"
            )

    @property
    def lower(self) -> float:
        return self.center - self.half_width

    @property
    def upper(self) -> float:
        return self.center + self.half_width

    def pdf_array(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lower) & (x < self.upper)
        return np.where(inside, 1.0 / (2.0 * self.half_width), 0.0)

    def cdf_array(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.lower) / (2.0 * self.half_width), 0.0, 1.0)

    def cdf_scalar(self, x: float) -> float:
        return min(1.0, max(0.0, (x - self.lower) / (2.0 * self.half_width)))

    def inverse_cdf_array(self, u):
        u = np.asarray(u, dtype=float)
        # cdf is 0 on [-1, lower], so the smallest preimage of 0 is -1
        return np.where(u > 0.0, self.lower + 2.0 * self.half_width * u, -1.0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "center": self.center, "half_width": self.half_width}


@dataclass(frozen=True, eq=False)
class PiecewiseConstant:
    """Cell k carries mass ``weights[k]`` spread evenly over [b_k, b_{k+1}]."""

    breakpoints: tuple
    weights: tuple
    kind = "piecewise"

    def __post_init__(self):
        b = tuple(float(v) for v in self.breakpoints)
        w = tuple(float(v) for v in self.weights)
        if len(b) < 2:
            raise ConstructionError("need at least two breakpoints", field="breakpoints")
        if b[0] != -1.0 or b[-1] != 1.0:
            raise ConstructionError("breakpoints must start at -1 and end at 1", field="breakpoints")
        if any(not (lo < hi) for lo, hi in zip(b, b[1:])):
            raise ConstructionError("breakpoints must be strictly increasing", field="breakpoints")
        if len(w) != len(b) - 1:
            raise ConstructionError(
                f"expected {len(b) - 1} weights for {len(b)} breakpoints, got {len(w)}", field="weights"
            )
        if any(not math.isfinite(v) or v < 0.0 for v in w):
            raise ConstructionError("weights must be finite and nonnegative", field="weights")
        total = math.fsum(w)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ConstructionError(f"weights sum to {total!r}, not 1", field="weights")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "weights", w)
        edges = np.array(b)
        mass = np.array(w) / total
        cum = np.minimum(np.concatenate([[0.0], np.cumsum(mass)]), 1.0)
        cum[-1] = 1.0
        object.__setattr__(self, "_edges", edges)
        object.__setattr__(self, "_mass", mass)
        object.__setattr__(self, "_cum", cum)
        object.__setattr__(self, "_cum_list", cum.tolist())
        object.__setattr__(self, "_width", np.diff(edges))

    def __eq__(self, other):
        if not isinstance(other, PiecewiseConstant):
            return NotImplemented
        return self.breakpoints == other.breakpoints and self.weights == other.weights

    def __hash__(self):
        return hash((self.breakpoints, self.weights))

    def __repr__(self):
        return f"PiecewiseConstant(breakpoints={list(self.breakpoints)}, weights={list(self.weights)})"

    @property
    def n_cells(self) -> int:
        return len(self.weights)

    def _cell(self, x):
        k = np.searchsorted(self._edges, x, side="right") - 1
        return np.clip(k, 0, self.n_cells - 1)

    def pdf_array(self, x):
        x = np.asarray(x, dtype=float)
        k = self._cell(x)
        return self._mass[k] / self._width[k]

    def cdf_array(self, x):
        x = np.asarray(x, dtype=float)
        k = self._cell(x)
        inner = self._mass[k] * (x - self._edges[k]) / self._width[k]
        return np.where(x >= 1.0, 1.0, np.minimum(self._cum[k] + inner, 1.0))

    def cdf_scalar(self, x: float) -> float:
        if x >= 1.0:
            return 1.0
        b = self.breakpoints
        k = min(max(bisect.bisect_right(b, x) - 1, 0), len(b) - 2)
        cum = self._cum_list
        mass = cum[k + 1] - cum[k]
        return min(1.0, cum[k] + mass * (x - b[k]) / (b[k + 1] - b[k]))

    def inverse_cdf_array(self, u):
        u = np.asarray(u, dtype=float)
        # first cell whose upper cumulative mass reaches u; it has positive mass when u > 0
        k = np.clip(np.searchsorted(self._cum[1:], u, side="left"), 0, self.n_cells - 1)
        mass = self._mass[k]
        safe = np.where(mass > 0.0, mass, 1.0)
        frac = np.clip((u - self._cum[k]) / safe, 0.0, 1.0)
        x = self._edges[k] + frac * self._width[k]
        return np.where(u > 0.0, np.minimum(x, 1.0), -1.0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "breakpoints": list(self.breakpoints), "weights": list(self.weights)}


BreakDensity = Union[Uniform, LocallyUniform, PiecewiseConstant]


def _check_x(x: float, name: str = "x") -> float:
    x = float(x)
    if not (-1.0 <= x <= 1.0):
        raise DomainError(f"{name}={x!r} outside [-1, 1]")
    return x


def pdf_at(density: BreakDensity, x: float) -> float:
    """Density value at ``x``; right-continuous at cell boundaries."""
    return float(density.pdf_array(_check_x(x)))


def cdf(density: BreakDensity, x: float) -> float:
    return density.cdf_scalar(_check_x(x))


def integrate(density: BreakDensity, x1: float, x2: float) -> float:
    """Probability that the elastic breaks inside [x1, x2]."""
    x1 = _check_x(x1, "x1")
    x2 = _check_x(x2, "x2")
    if x1 > x2:
        raise DomainError(f"integration limits reversed: {x1!r} > {x2!r}")
    if x1 == x2:
        return 0.0
    if x1 == -1.0:
        return density.cdf_scalar(x2)
    return max(0.0, density.cdf_scalar(x2) - density.cdf_scalar(x1))


def inverse_cdf(density: BreakDensity, u: float) -> float:
    """Smallest x in [-1, 1] with cdf(x) >= u."""
    u = float(u)
    if not (0.0 <= u <= 1.0):
        raise DomainError(f"u={u!r} outside [0, 1]")
    return float(density.inverse_cdf_array(u))


def sample_break_point(density: BreakDensity, rng) -> float:
    """Draw one break point by inversion; ``rng`` needs a ``random()`` method."""
    return float(density.inverse_cdf_array(rng.random()))


def sample_break_points(density: BreakDensity, rng: np.random.Generator, size: int) -> np.ndarray:
    return density.inverse_cdf_array(rng.random(size))


def from_dict(obj, path: str = "") -> BreakDensity:
    """Decode the JSON density encoding; errors carry the JSON path."""
    if not isinstance(obj, dict):
        raise ValidationError(path, "density must be an object")
    kind = obj.get("kind")
    try:
        if kind == "uniform":
            _no_extra(obj, {"kind"}, path)
            return Uniform()
        if kind == "locally_uniform":
            _no_extra(obj, {"kind", "center", "half_width"}, path)
            return LocallyUniform(
                _number(obj, "center", path), _number(obj, "half_width", path)
            )
        if kind == "piecewise":
            _no_extra(obj, {"kind", "breakpoints", "weights"}, path)
            return PiecewiseConstant(
                tuple(_numbers(obj, "breakpoints", path)), tuple(_numbers(obj, "weights", path))
            )
    except ConstructionError as exc:
        sub = f"{path}.{exc.field}" if exc.field else path
        raise ValidationError(sub, str(exc)) from None
    raise ValidationError(f"{path}.kind", f"unknown density kind {kind!r}")


def to_dict(density: BreakDensity) -> dict:
    return density.to_dict()


def _no_extra(obj: dict, allowed: set, path: str) -> None:
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ValidationError(f"{path}.{extra[0]}", "unexpected key")


def _number(obj: dict, key: str, path: str) -> float:
    value = obj.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{path}.{key}", "expected a number")
    return float(value)


def _numbers(obj: dict, key: str, path: str) -> list:
    values = obj.get(key)
    if not isinstance(values, list):
        raise ValidationError(f"{path}.{key}", "expected an array of numbers")
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationError(f"{path}.{key}[{i}]", "expected a number")
    return [float(v) for v in values]
