"""Recovering scenario parameters from target AB / BA probability tables.

Free parameters are attached to a scenario skeleton through *bindings*:

``cos_theta_A``, ``cos_theta_B``, ``cos_theta``
    one of the three cosines (the skeleton must use the cosine form);
``<id>|<context>.center``, ``<id>|<context>.half_width``
    a parameter of a locally uniform density;
``<id>|<context>.weights``
    the whole weight vector of a piecewise-constant density. It is searched
    through softmax logits so every trial point stays on the simplex; the
    parameter's bounds apply to each weight.

The objective is the plain sum of squared differences over the eight AB and
BA entries. Points the model cannot realize score ``PENALTY`` plus the size of
the violation instead of raising, so the search never aborts.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import density as _density
from .documents import parse_scenario
from .errors import ConstructionError, StructuralError, ValidationError
from .geometry import ScenarioGeometry, gram_realizable, gram_violation, landing_coordinate
from .measurement import ANSWERS, INITIAL, NO, YES, DichotomicMeasurement, Scenario
from .montecarlo import check_seed, default_threads, substream
from .sequential import ProbabilityTable, SequenceSpec, sequence_distribution, validate_sequence

PENALTY = 1e6
CONVERGED_LOSS = 1e-8
LOGIT_BOUND = 30.0
STALL_WINDOW = 200
STALL_RTOL = 1e-9
COSINE_BINDINGS = ("cos_theta_A", "cos_theta_B", "cos_theta")
DENSITY_FIELDS = ("center", "half_width", "weights")


@dataclass(frozen=True)
class FreeParameter:
    name: str
    binding: str
    lower: float
    upper: float


@dataclass(frozen=True)
class _Binding:
    kind: str  # "cosine" or one of DENSITY_FIELDS
    index: int = 0  # cosine index
    measurement: str = ""
    context: str = ""
    size: int = 1  # number of weights for "weights"


class _Stalled(Exception):
    """No relative progress of STALL_RTOL over the last STALL_WINDOW * dim evaluations."""


class Infeasible(Exception):
    def __init__(self, amount: float):
        self.amount = amount


class FitSpec:
    """Free parameters, their bindings and the fixed scenario they modify."""

    def __init__(self, skeleton: Scenario, free_parameters, pair: tuple | None = None):
        self.skeleton = skeleton
        self.free_parameters = tuple(free_parameters)
        self.pair = tuple(pair) if pair is not None else skeleton.ids[:2]
        if len(self.pair) != 2 or self.pair[0] == self.pair[1]:
            raise StructuralError(f"pair must name two distinct measurements, got {self.pair!r}")
        for mid in self.pair:
            skeleton.measurement(mid)
        if not self.free_parameters:
            raise StructuralError("at least one free parameter is required")
        names = [p.name for p in self.free_parameters]
        if len(set(names)) != len(names):
            raise StructuralError("free parameter names must be unique")
        self._bindings = [self._resolve(p) for p in self.free_parameters]
        targets = [(b.kind, b.index, b.measurement, b.context) for b in self._bindings]
        if len(set(targets)) != len(targets):
            raise StructuralError("two free parameters bind the same quantity")
        a, b = self.pair
        validate_sequence(skeleton, SequenceSpec((a, b)))
        validate_sequence(skeleton, SequenceSpec((b, a)))
        ax, bx = skeleton.measurement(a).axis, skeleton.measurement(b).axis
        self._landings = (
            landing_coordinate(skeleton.initial_state, ax),
            landing_coordinate(skeleton.initial_state, bx),
            landing_coordinate(ax.yes_anchor, bx),
        )

    def _resolve(self, p: FreeParameter) -> _Binding:
        lo, hi = float(p.lower), float(p.upper)
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise StructuralError(f"parameter {p.name!r}: bounds must be finite with lower < upper")
        if p.binding in COSINE_BINDINGS:
            if self.skeleton.geometry is None:
                raise StructuralError(f"parameter {p.name!r}: cosine bindings need a cosine-form scenario")
            if lo < -1.0 or hi > 1.0:
                raise StructuralError(f"parameter {p.name!r}: cosine bounds must lie in [-1, 1]")
            return _Binding("cosine", index=COSINE_BINDINGS.index(p.binding))
        target, dot, fld = p.binding.rpartition(".")
        mid, bar, ctx = target.partition("|")
        if not (dot and bar and fld in DENSITY_FIELDS):
            raise StructuralError(f"parameter {p.name!r}: unknown binding {p.binding!r}")
        rho = self.skeleton.measurement(mid).density_for(ctx)
        if fld in ("center", "half_width"):
            if not isinstance(rho, _density.LocallyUniform):
                raise StructuralError(f"parameter {p.name!r}: {target} is not a locally uniform density")
            if fld == "center" and (lo < -1.0 or hi > 1.0):
                raise StructuralError(f"parameter {p.name!r}: center bounds must lie in [-1, 1]")
            if fld == "half_width" and (lo <= 0.0 or hi > 1.0):
                raise StructuralError(f"parameter {p.name!r}: half_width bounds must lie in (0, 1]")
            return _Binding(fld, measurement=mid, context=ctx)
        if not isinstance(rho, _density.PiecewiseConstant):
            raise StructuralError(f"parameter {p.name!r}: {target} is not a piecewise density")
        if lo < 0.0 or hi > 1.0:
            raise StructuralError(f"parameter {p.name!r}: weight bounds must lie in [0, 1]")
        if rho.n_cells < 2:
            raise StructuralError(f"parameter {p.name!r}: a single-cell density has no free weights")
        return _Binding("weights", measurement=mid, context=ctx, size=rho.n_cells)

    # --- coordinates -------------------------------------------------------

    @property
    def dimension(self) -> int:
        return sum(b.size - 1 if b.kind == "weights" else 1 for b in self._bindings)

    def search_bounds(self) -> list:
        out = []
        for p, b in zip(self.free_parameters, self._bindings):
            if b.kind == "weights":
                out.extend([(-LOGIT_BOUND, LOGIT_BOUND)] * (b.size - 1))
            else:
                out.append((float(p.lower), float(p.upper)))
        return out

    def decode(self, x) -> dict:
        """Search coordinates -> {name: value}; weights come back as lists."""
        params, i = {}, 0
        for p, b in zip(self.free_parameters, self._bindings):
            if b.kind == "weights":
                z = np.append(np.asarray(x[i:i + b.size - 1], dtype=float), 0.0)
                e = np.exp(z - z.max())
                params[p.name] = (e / e.sum()).tolist()
                i += b.size - 1
            else:
                params[p.name] = float(x[i])
                i += 1
        return params

    def encode(self, params: dict) -> np.ndarray:
        x = []
        for p, b in zip(self.free_parameters, self._bindings):
            v = params[p.name]
            if b.kind == "weights":
                w = np.maximum(np.asarray(v, dtype=float), 1e-300)
                x.extend(np.clip(np.log(w[:-1]) - np.log(w[-1]), -LOGIT_BOUND, LOGIT_BOUND))
            else:
                x.append(float(v))
        return np.array(x)

    def random_start(self, rng: np.random.Generator) -> dict:
        params = {}
        for p, b in zip(self.free_parameters, self._bindings):
            if b.kind == "weights":
                draws = rng.standard_exponential(b.size)
                params[p.name] = (draws / draws.sum()).tolist()
            else:
                params[p.name] = float(rng.uniform(p.lower, p.upper))
        return params

    # --- instantiation -----------------------------------------------------

    def bound_violation(self, params: dict) -> float:
        total = 0.0
        for p in self.free_parameters:
            vals = params[p.name] if isinstance(params[p.name], list) else [params[p.name]]
            for v in vals:
                total += max(0.0, p.lower - v) + max(0.0, v - p.upper)
        return total

    def _substitute(self, params: dict) -> tuple:
        """(cosines or None, {id: {context: density}}) with the parameters applied."""
        missing = [p.name for p in self.free_parameters if p.name not in params]
        if missing:
            raise StructuralError(f"missing parameter values {missing}")
        violation = self.bound_violation(params)
        if violation > 0.0:
            raise Infeasible(violation)
        sk = self.skeleton
        cosines = list(sk.geometry.as_tuple()) if sk.geometry is not None else None
        dens = {m.id: dict(m.densities) for m in sk.measurements}
        pending = {}
        for p, b in zip(self.free_parameters, self._bindings):
            if b.kind == "cosine":
                cosines[b.index] = float(params[p.name])
            else:
                pending.setdefault((b.measurement, b.context), {})[b.kind] = params[p.name]
        for (mid, ctx), changes in pending.items():
            old = dens[mid][ctx]
            if isinstance(old, _density.PiecewiseConstant):
                dens[mid][ctx] = _density.PiecewiseConstant(old.breakpoints, tuple(changes["weights"]))
                continue
            center = float(changes.get("center", old.center))
            half = float(changes.get("half_width", old.half_width))
            spill = max(0.0, -1.0 - (center - half)) + max(0.0, center + half - 1.0)
            if spill > 0.0 or half <= 0.0 or abs(center) >= 1.0:
                raise Infeasible(spill + max(0.0, -half) + 1e-12)
            dens[mid][ctx] = _density.LocallyUniform(center, half)
        if cosines is not None and not gram_realizable(*cosines):
            raise Infeasible(gram_violation(*cosines))
        return cosines, dens

    def instantiate(self, params: dict) -> Scenario:
        """Skeleton with the parameters substituted; raises ``Infeasible`` if unrealizable."""
        cosines, dens = self._substitute(params)
        sk = self.skeleton
        if cosines is not None:
            ids = sk.ids
            return Scenario.from_cosines(
                ScenarioGeometry(*cosines), dens[ids[0]], dens[ids[1]], ids, sk.default_to_initial
            )
        return Scenario(
            sk.initial_state,
            tuple(DichotomicMeasurement(m.id, m.axis, dens[m.id]) for m in sk.measurements),
            sk.default_to_initial,
        )

    def pair_entries(self, params: dict) -> list:
        """The eight AB then BA probabilities in table order, without building tables.

        Same products as ``tables`` but cheap enough for the optimizer's inner loop.
        """
        cosines, dens = self._substitute(params)
        a, b = self.pair
        if cosines is not None and self.skeleton.ids[:2] == (a, b):
            c_a, c_b, c_ab = cosines
        elif cosines is not None:
            c_b, c_a, c_ab = cosines
        else:
            c_a, c_b, c_ab = self._landings
        fallback = self.skeleton.default_to_initial

        def rho(mid, ctx):
            d = dens[mid]
            return d[ctx] if ctx in d or not fallback else d[INITIAL]

        out = []
        for x, y, c_x in ((a, b, c_a), (b, a, c_b)):
            first = rho(x, INITIAL)
            p_first = (_density.integrate(first, -1.0, c_x), _density.integrate(first, c_x, 1.0))
            for answer, p, c in ((YES, p_first[0], c_ab), (NO, p_first[1], -c_ab)):
                second = rho(y, f"{x}:{answer}")
                out.append(p * _density.integrate(second, -1.0, c))
                out.append(p * _density.integrate(second, c, 1.0))
        return out

    def tables(self, params: dict) -> tuple:
        scenario = self.instantiate(params)
        a, b = self.pair
        return (
            sequence_distribution(scenario, SequenceSpec((a, b))),
            sequence_distribution(scenario, SequenceSpec((b, a))),
        )


@dataclass(frozen=True)
class FitResult:
    parameters: dict
    loss: float
    evaluations: int
    converged: bool
    restart: int = 0

    def to_dict(self) -> dict:
        return {
            "parameters": dict(self.parameters),
            "loss": self.loss,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "best_restart": self.restart,
        }


def check_targets(spec: FitSpec, target_AB: ProbabilityTable, target_BA: ProbabilityTable) -> None:
    a, b = spec.pair
    for table, steps, name in ((target_AB, (a, b), "target_ab"), (target_BA, (b, a), "target_ba")):
        if not isinstance(table, ProbabilityTable):
            raise StructuralError(f"{name} must be a ProbabilityTable")
        if table.steps != steps:
            raise StructuralError(f"{name} is over {','.join(table.steps)!r}, expected {','.join(steps)!r}")


def loss(params: dict, spec: FitSpec, target_AB: ProbabilityTable, target_BA: ProbabilityTable) -> float:
    """Sum of squared errors over the eight AB/BA entries (penalized if unrealizable)."""
    check_targets(spec, target_AB, target_BA)
    return _loss(params, spec, target_AB, target_BA)


def _target_entries(target_AB, target_BA) -> list:
    return [t.prob(i, j) for t in (target_AB, target_BA) for i in ANSWERS for j in ANSWERS]


def _loss(params, spec, target_AB, target_BA, targets=None) -> float:
    try:
        model = spec.pair_entries(params)
    except Infeasible as exc:
        return PENALTY + exc.amount
    if targets is None:
        targets = _target_entries(target_AB, target_BA)
    total = 0.0
    for m, t in zip(model, targets):
        total += (m - t) * (m - t)
    return total


def _initial_simplex(x0: np.ndarray, bounds: list) -> np.ndarray:
    n = len(x0)
    simplex = np.tile(x0, (n + 1, 1))
    for k, (lo, hi) in enumerate(bounds):
        step = 0.1 * (hi - lo)
        simplex[k + 1, k] = x0[k] + step if x0[k] + step <= hi else x0[k] - step
    return simplex


def _restart(spec, target_AB, target_BA, seed, index) -> tuple:
    rng = substream(seed, index)
    bounds = spec.search_bounds()
    start = spec.random_start(rng)
    for _ in range(1000):
        if _loss(start, spec, target_AB, target_BA) < PENALTY:
            break
        start = spec.random_start(rng)
    x0 = np.clip(spec.encode(start), [lo for lo, _ in bounds], [hi for _, hi in bounds])

    targets = _target_entries(target_AB, target_BA)
    dim = len(x0)
    lo, hi = [lo for lo, _ in bounds], [hi for _, hi in bounds]
    window = STALL_WINDOW * dim
    track = {"best": math.inf, "x": x0, "mark": math.inf, "since": 0, "nfev": 0}

    def objective(x):
        value = _loss(spec.decode(np.clip(x, lo, hi)), spec, target_AB, target_BA, targets)
        track["nfev"] += 1
        if value < track["best"]:
            track["best"], track["x"] = value, np.array(x)
        if track["best"] < track["mark"] * (1.0 - STALL_RTOL):
            track["mark"], track["since"] = track["best"], 0
        else:
            track["since"] += 1
            if track["since"] >= window:
                raise _Stalled
        return value

    try:
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            options={
                "initial_simplex": _initial_simplex(x0, bounds),
                "xatol": 1e-11,
                "fatol": 1e-18,
                "maxfev": 3000 * dim,
                "adaptive": dim > 2,
            },
        )
        x = res.x if _objective_value(res) <= track["best"] else track["x"]
    except _Stalled:
        x = track["x"]
    params = spec.decode(np.clip(x, lo, hi))
    return _loss(params, spec, target_AB, target_BA, targets), index, params, track["nfev"]


def _objective_value(res) -> float:
    return float(res.fun) if res.fun is not None else math.inf

def fit(
    spec: FitSpec,
    target_AB: ProbabilityTable,
    target_BA: ProbabilityTable,
    restarts: int = 8,
    seed: int = 0,
    threads: int | None = None,
) -> FitResult:
    """Multi-start bounded Nelder-Mead; the lowest loss wins, ties to the earliest restart."""
    check_targets(spec, target_AB, target_BA)
    if int(restarts) < 1:
        raise StructuralError("restarts must be >= 1")
    seed = check_seed(seed)
    workers = max(1, min(threads or default_threads(), restarts))

    def job(i):
        return _restart(spec, target_AB, target_BA, seed, i)

    if workers == 1:
        results = [job(i) for i in range(restarts)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(restarts)))
    best_loss, best_index, best_params, _ = min(results, key=lambda r: (r[0], r[1]))
    return FitResult(
        parameters=best_params,
        loss=best_loss,
        evaluations=sum(r[3] for r in results),
        converged=best_loss < CONVERGED_LOSS,
        restart=best_index,
    )


# --- JSON problem files ----------------------------------------------------


def parse_free_parameters(obj, path: str) -> list:
    if not isinstance(obj, list) or not obj:
        raise ValidationError(path, "expected a nonempty array of parameters")
    out = []
    for i, p in enumerate(obj):
        sub = f"{path}[{i}]"
        if not isinstance(p, dict):
            raise ValidationError(sub, "expected an object")
        for key in ("name", "binding"):
            if not isinstance(p.get(key), str) or not p[key]:
                raise ValidationError(f"{sub}.{key}", "expected a nonempty string")
        for key in ("lower", "upper"):
            v = p.get(key)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ValidationError(f"{sub}.{key}", "expected a number")
        out.append(FreeParameter(p["name"], p["binding"], float(p["lower"]), float(p["upper"])))
    return out


def parse_fit_spec(obj, path: str = "spec") -> FitSpec:
    if not isinstance(obj, dict):
        raise ValidationError(path, "expected an object")
    skeleton = _prefixed(lambda: parse_scenario(obj.get("scenario")), f"{path}.scenario")
    params = parse_free_parameters(obj.get("free_parameters"), f"{path}.free_parameters")
    pair = obj.get("pair")
    if pair is not None and (not isinstance(pair, list) or not all(isinstance(x, str) for x in pair)):
        raise ValidationError(f"{path}.pair", "expected an array of two measurement ids")
    try:
        return FitSpec(skeleton, params, tuple(pair) if pair else None)
    except (StructuralError, LookupError) as exc:
        raise ValidationError(path, str(exc)) from None


def parse_table(obj, path: str) -> ProbabilityTable:
    if not isinstance(obj, dict) or not obj:
        raise ValidationError(path, "expected an object mapping outcome strings to probabilities")
    for k, v in obj.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationError(f"{path}.{k}", "expected a number")
    try:
        return ProbabilityTable.from_entries(obj)
    except (StructuralError, ConstructionError) as exc:
        raise ValidationError(path, str(exc)) from None


def parse_problem(obj) -> tuple:
    """(spec, target_AB, target_BA, restarts, seed) from a fit-problem document."""
    if not isinstance(obj, dict):
        raise ValidationError("", "expected a JSON object")
    spec = parse_fit_spec(obj.get("spec"))
    ab = parse_table(obj.get("target_ab"), "target_ab")
    ba = parse_table(obj.get("target_ba"), "target_ba")
    try:
        check_targets(spec, ab, ba)
    except StructuralError as exc:
        raise ValidationError("target_ab", str(exc)) from None
    restarts = obj.get("restarts", 8)
    seed = obj.get("seed", 0)
    if isinstance(restarts, bool) or not isinstance(restarts, int) or restarts < 1:
        raise ValidationError("restarts", "expected a positive integer")
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ValidationError("seed", "expected an unsigned 64-bit integer")
    return spec, ab, ba, restarts, seed


def _prefixed(fn, prefix: str):
    try:
        return fn()
    except ValidationError as exc:
        sub = f"{prefix}.{exc.path}" if exc.path and not exc.path.startswith("[") else f"{prefix}{exc.path}"
        raise ValidationError(sub, exc.message) from None
