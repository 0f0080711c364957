import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gtr_bloch.errors import ConstructionError, DomainError
from gtr_bloch.geometry import (
    MeasurementAxis,
    ScenarioGeometry,
    UnitVector3,
    from_spherical,
    gram_realizable,
    gram_violation,
    landing_coordinate,
    normalize,
)

angles = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)


@pytest.mark.parametrize(
    "v, expected",
    [((0, 0, 2), (0, 0, 1)), ((1, 0, 0), (1, 0, 0)), ((3, 4, 0), (0.6, 0.8, 0))],
)
def test_normalize(v, expected):
    assert normalize(v).as_tuple() == pytest.approx(expected, abs=1e-15)


def test_normalize_zero_vector():
    with pytest.raises(ConstructionError):
        normalize((0.0, 0.0, 0.0))


def test_unit_vector_rejects_non_unit():
    with pytest.raises(ConstructionError):
        UnitVector3(1.0, 1.0, 0.0)


def test_normalize_is_idempotent(rng):
    for _ in range(200):
        v = normalize(rng.normal(size=3))
        assert normalize(v.as_tuple()) == v


def test_from_spherical_examples():
    assert from_spherical(0.0, 1.234).as_tuple() == pytest.approx((0, 0, 1), abs=1e-15)
    assert from_spherical(math.pi / 2, 0.0).as_tuple() == pytest.approx((1, 0, 0), abs=1e-15)
    assert from_spherical(math.pi / 3, 0.0).as_tuple() == pytest.approx((math.sqrt(3) / 2, 0, 0.5), abs=1e-15)


@given(angles, angles)
def test_from_spherical_unit_norm(polar, azimuth):
    v = from_spherical(polar, azimuth)
    assert abs(math.sqrt(v.dot(v)) - 1.0) <= 1e-9


def test_landing_coordinate_examples():
    a = MeasurementAxis(UnitVector3(1, 0, 0))
    assert landing_coordinate(a.yes_anchor, a) == 1.0
    assert landing_coordinate(a.no_anchor(), a) == -1.0
    assert landing_coordinate(UnitVector3(0.6, 0.8, 0.0), a) == pytest.approx(0.6, abs=1e-15)


@given(angles, angles, angles, angles)
def test_landing_coordinate_antisymmetric_under_swap(p1, a1, p2, a2):
    s = from_spherical(p1, a1)
    axis = MeasurementAxis(from_spherical(p2, a2))
    c = landing_coordinate(s, axis)
    assert -1.0 <= c <= 1.0
    assert landing_coordinate(s, axis.swapped()) == pytest.approx(-c, abs=1e-15)


def test_landing_on_anchor_is_exact(rng):
    # dot(v, v) can round below 1 for generic unit vectors
    for _ in range(500):
        v = normalize(rng.normal(size=3))
        axis = MeasurementAxis(v)
        assert landing_coordinate(v, axis) == 1.0
        assert landing_coordinate(-v, axis) == -1.0


@pytest.mark.parametrize(
    "triple, expected",
    [((1, 1, 1), True), ((0, 0, 0), True), ((0.9, -0.9, 0.9), False)],
)
def test_gram_realizable_examples(triple, expected):
    assert gram_realizable(*triple) is expected


def test_gram_example_determinant_oracle():
    cA, cB, c = 0.9, -0.9, 0.9
    det = np.linalg.det(np.array([[1, cA, cB], [cA, 1, c], [cB, c, 1]]))
    assert det < 0
    assert gram_violation(cA, cB, c) > 0


def test_gram_domain_error():
    with pytest.raises(DomainError):
        gram_realizable(1.5, 0, 0)


@given(angles, angles, angles, angles, angles, angles)
def test_random_vectors_are_realizable(p1, a1, p2, a2, p3, a3):
    s, a, b = from_spherical(p1, a1), from_spherical(p2, a2), from_spherical(p3, a3)
    clamp = lambda x: min(1.0, max(-1.0, x))
    assert gram_realizable(clamp(s.dot(a)), clamp(s.dot(b)), clamp(a.dot(b)))


def test_gram_agrees_with_eigenvalue_oracle(rng):
    for _ in range(2000):
        triple = rng.uniform(-1, 1, size=3)
        eig = np.linalg.eigvalsh(np.array([[1, triple[0], triple[1]], [triple[0], 1, triple[2]], [triple[1], triple[2], 1]]))
        if abs(eig[0]) < 1e-8:
            continue
        assert gram_realizable(*triple) is bool(eig[0] > 0)


def test_geometry_vectors_reproduce_cosines(rng):
    from conftest import random_geometry

    for _ in range(500):
        g = random_geometry(rng)
        state, a, b = g.vectors()
        assert state.dot(a) == pytest.approx(g.cos_theta_A, abs=1e-12)
        assert state.dot(b) == pytest.approx(g.cos_theta_B, abs=1e-9)
        assert a.dot(b) == g.cos_theta


def test_scenario_geometry_rejects_unrealizable():
    with pytest.raises(ConstructionError):
        ScenarioGeometry(0.9, -0.9, 0.9)
