import math

import numpy as np
import pytest

from gtr_bloch.density import LocallyUniform, PiecewiseConstant, Uniform
from gtr_bloch.geometry import MeasurementAxis, ScenarioGeometry, cosines_of, from_spherical
from gtr_bloch.measurement import DichotomicMeasurement, Scenario

U = Uniform()
Q_DENSITY = PiecewiseConstant((-1.0, 0.0, 1.0), (0.7, 0.3))


def uniform_maps():
    return (
        {"initial": U, "B:yes": U, "B:no": U},
        {"initial": U, "A:yes": U, "A:no": U},
    )


def uniform_scenario(cA, cB, c):
    dA, dB = uniform_maps()
    return Scenario.from_cosines(ScenarioGeometry(cA, cB, c), dA, dB)


def q_scenario():
    """rho_B(.|A_y) skewed, everything else uniform: QQ = 0.05 by hand."""
    dA, dB = uniform_maps()
    dB["A:yes"] = Q_DENSITY
    return Scenario.from_cosines(ScenarioGeometry(0.0, 0.0, 0.5), dA, dB)


def random_unit(rng):
    polar = math.acos(rng.uniform(-1.0, 1.0))
    return from_spherical(polar, rng.uniform(0.0, 2.0 * math.pi))


def random_vectors(rng):
    return random_unit(rng), random_unit(rng), random_unit(rng)


def random_geometry(rng):
    return cosines_of(*random_vectors(rng))


def random_density(rng, family=None):
    family = family if family is not None else int(rng.integers(3))
    if family == 0:
        return U
    if family == 1:
        half = rng.uniform(0.05, 0.9)
        center = rng.uniform(-1.0 + half, 1.0 - half)
        return LocallyUniform(center, half)
    n = int(rng.integers(1, 8))
    inner = np.sort(rng.uniform(-1.0, 1.0, n - 1))
    w = rng.standard_exponential(n)
    return PiecewiseConstant((-1.0, *inner, 1.0), tuple(w / w.sum()))


def random_scenario(rng, vector_form=True, family=None):
    """Two measurements A, B with every context density drawn at random (optionally from one family)."""
    dA = {k: random_density(rng, family) for k in ("initial", "B:yes", "B:no", "A:yes", "A:no")}
    dB = {k: random_density(rng, family) for k in ("initial", "A:yes", "A:no", "B:yes", "B:no")}
    if vector_form:
        state, a, b = random_vectors(rng)
        return Scenario(
            state,
            (DichotomicMeasurement("A", MeasurementAxis(a), dA), DichotomicMeasurement("B", MeasurementAxis(b), dB)),
        )
    return Scenario.from_cosines(random_geometry(rng), dA, dB)


@pytest.fixture
def rng():
    return np.random.default_rng(20161016)


def moderate_geometry(rng, bound=0.8):
    """Realizable cosines all within [-bound, bound], so every branch keeps some mass."""
    while True:
        g = random_geometry(rng)
        if max(abs(v) for v in g.as_tuple()) <= bound:
            return g


def fit_problem(rng, family):
    """(spec, truth) for a self-generated round-trip problem with at most 4 free parameters.

    family 0: three cosines, all densities uniform
    family 1: cosines plus the two-cell weights of rho_B(.|A_y)
    family 2: cosines plus the center of a locally uniform rho_B(.|A_y)
    """
    from gtr_bloch.fitting import FitSpec, FreeParameter

    g = moderate_geometry(rng)
    dA, dB = uniform_maps()
    params = [
        FreeParameter("cA", "cos_theta_A", -1.0, 1.0),
        FreeParameter("cB", "cos_theta_B", -1.0, 1.0),
        FreeParameter("c", "cos_theta", -1.0, 1.0),
    ]
    truth = {"cA": g.cos_theta_A, "cB": g.cos_theta_B, "c": g.cos_theta}
    if family == 1:
        w = float(rng.uniform(0.2, 0.8))
        dB["A:yes"] = PiecewiseConstant((-1.0, 0.0, 1.0), (0.5, 0.5))
        params.append(FreeParameter("w", "B|A:yes.weights", 0.0, 1.0))
        truth["w"] = [w, 1.0 - w]
    elif family == 2:
        half = 0.4
        center = float(np.clip(g.cos_theta + rng.uniform(-0.25, 0.25), -0.6, 0.6))
        dB["A:yes"] = LocallyUniform(0.0, half)
        params.append(FreeParameter("m", "B|A:yes.center", -0.6, 0.6))
        truth["m"] = center
    skeleton = Scenario.from_cosines(ScenarioGeometry(0.0, 0.0, 0.0), dA, dB)
    return FitSpec(skeleton, params), truth


def parameter_error(found, truth):
    err = 0.0
    for k, v in truth.items():
        a = np.atleast_1d(found[k])
        err = max(err, float(np.max(np.abs(a - np.atleast_1d(v)))))
    return err
