"""JSON scenario documents: parsing with path-aware diagnostics, and emission.

A scenario document looks like::

    {
      "initial_state": {"cosines": {"cos_theta_A": 0.6, "cos_theta_B": 0.2, "cos_theta": 0.5}},
      "measurements": [
        {"id": "A", "densities": {"initial": {"kind": "uniform"}, "B:yes": ..., "B:no": ...}},
        {"id": "B", "densities": {"initial": {"kind": "uniform"}, "A:yes": ..., "A:no": ...}}
      ],
      "default_to_initial": false
    }

With ``{"vector": [x, y, z]}`` as initial state every measurement instead
carries its own ``"axis": [x, y, z]`` (the yes-anchor direction).
"""

from __future__ import annotations

import json

from . import density as _density
from .errors import ConstructionError, GTRError, ValidationError
from .geometry import MeasurementAxis, ScenarioGeometry, normalize
from .measurement import DichotomicMeasurement, Scenario

COSINE_KEYS = ("cos_theta_A", "cos_theta_B", "cos_theta")


def dumps(obj) -> str:
    """Canonical JSON text: stable key order, shortest round-trip floats."""
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def load_json(path) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError("", f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ValidationError("", f"cannot read {path}: {exc.strerror}") from None


def _expect(obj, kind, path: str, what: str):
    if not isinstance(obj, kind) or isinstance(obj, bool) and kind is not bool:
        raise ValidationError(path, f"expected {what}")
    return obj


def _vector(obj, path: str):
    _expect(obj, list, path, "an array of three numbers")
    if len(obj) != 3 or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in obj):
        raise ValidationError(path, "expected an array of three numbers")
    try:
        return normalize(obj)
    except ConstructionError as exc:
        raise ValidationError(path, str(exc)) from None


def _densities(obj, path: str) -> dict:
    _expect(obj, dict, path, "an object mapping context keys to densities")
    if "initial" not in obj:
        raise ValidationError(f"{path}.initial", "required density is missing")
    out = {}
    for key, enc in obj.items():
        sub = f"{path}.{key}"
        if key != "initial":
            mid, sep, answer = key.rpartition(":")
            if not sep or not mid or answer not in ("yes", "no"):
                raise ValidationError(sub, "context key must be 'initial' or '<id>:yes' / '<id>:no'")
        out[key] = _density.from_dict(enc, sub)
    return out


def parse_scenario(doc) -> Scenario:
    _expect(doc, dict, "", "a JSON object")
    extra = sorted(set(doc) - {"initial_state", "measurements", "default_to_initial"})
    if extra:
        raise ValidationError(extra[0], "unexpected key")
    fallback = doc.get("default_to_initial", False)
    _expect(fallback, bool, "default_to_initial", "a boolean")

    init = _expect(doc.get("initial_state"), dict, "initial_state", "an object")
    ms = _expect(doc.get("measurements"), list, "measurements", "an array")
    if not ms:
        raise ValidationError("measurements", "at least one measurement is required")

    if set(init) == {"cosines"}:
        cos = _expect(init["cosines"], dict, "initial_state.cosines", "an object")
        if set(cos) != set(COSINE_KEYS):
            raise ValidationError("initial_state.cosines", f"expected exactly the keys {list(COSINE_KEYS)}")
        for k in COSINE_KEYS:
            if isinstance(cos[k], bool) or not isinstance(cos[k], (int, float)):
                raise ValidationError(f"initial_state.cosines.{k}", "expected a number")
        try:
            geometry = ScenarioGeometry(*(float(cos[k]) for k in COSINE_KEYS))
        except GTRError as exc:
            raise ValidationError("initial_state.cosines", str(exc)) from None
        if len(ms) != 2:
            raise ValidationError("measurements", "the cosine form describes exactly two measurements")
    elif set(init) == {"vector"}:
        geometry = None
        state = _vector(init["vector"], "initial_state.vector")
    else:
        raise ValidationError("initial_state", "expected {'vector': [...]} or {'cosines': {...}}")

    ids, dens = [], []
    axes = []
    for i, m in enumerate(ms):
        path = f"measurements[{i}]"
        _expect(m, dict, path, "an object")
        allowed = {"id", "densities"} | (set() if geometry else {"axis"})
        extra = sorted(set(m) - allowed)
        if extra:
            raise ValidationError(f"{path}.{extra[0]}", "unexpected key")
        mid = m.get("id")
        if not isinstance(mid, str) or not mid or ":" in mid or "," in mid:
            raise ValidationError(f"{path}.id", "expected a nonempty id without ':' or ','")
        if mid in ids:
            raise ValidationError(f"{path}.id", f"duplicate measurement id {mid!r}")
        ids.append(mid)
        dens.append(_densities(m.get("densities"), f"{path}.densities"))
        if geometry is None:
            if "axis" not in m:
                raise ValidationError(f"{path}.axis", "required when the initial state is a vector")
            axes.append(MeasurementAxis(_vector(m["axis"], f"{path}.axis")))

    try:
        if geometry is not None:
            return Scenario.from_cosines(geometry, dens[0], dens[1], tuple(ids), fallback)
        return Scenario(
            state,
            tuple(DichotomicMeasurement(mid, ax, d) for mid, ax, d in zip(ids, axes, dens)),
            fallback,
        )
    except ConstructionError as exc:
        raise ValidationError("measurements", str(exc)) from None


def scenario_to_doc(scenario: Scenario) -> dict:
    """Normalized document; parsing it back yields an equal scenario."""
    if scenario.geometry is not None:
        g = scenario.geometry
        init = {"cosines": {k: getattr(g, k) for k in COSINE_KEYS}}
    else:
        init = {"vector": list(scenario.initial_state.as_tuple())}
    ms = []
    for m in scenario.measurements:
        entry = {"id": m.id}
        if scenario.geometry is None:
            entry["axis"] = list(m.axis.yes_anchor.as_tuple())
        entry["densities"] = {k: rho.to_dict() for k, rho in m.densities.items()}
        ms.append(entry)
    return {"initial_state": init, "measurements": ms, "default_to_initial": scenario.default_to_initial}


def load_scenario(path) -> Scenario:
    return parse_scenario(load_json(path))
