import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bellratio.errors import DomainError, UnsupportedGeometryError
from bellratio.geometry import (
    DetectionGeometry,
    angular_correlation,
    angular_correlation_collinear,
    angular_correlation_pinhole,
    canonicalize_angle,
    solid_angle,
)


@pytest.mark.parametrize(
    "phi, expected",
    [(0.0, 0.0), (math.pi, 4 * math.pi), (math.pi / 3, math.pi)],
)
def test_solid_angle_examples(phi, expected):
    assert solid_angle(phi) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("phi", [-1e-9, math.pi + 1e-9, float("nan")])
def test_solid_angle_rejects_out_of_range(phi):
    with pytest.raises(DomainError):
        solid_angle(phi)


def test_solid_angle_monotone():
    phis = [i * math.pi / 1000 for i in range(1001)]
    omegas = [solid_angle(p) for p in phis]
    assert all(b >= a for a, b in zip(omegas, omegas[1:]))
    assert all(0.0 <= w <= 4 * math.pi for w in omegas)


@pytest.mark.parametrize(
    "theta, phi, expected",
    [(math.pi, 0.0, 1.5), (math.pi / 2, 0.0, 0.75), (math.pi, math.pi / 2, 1.0)],
)
def test_angular_correlation_examples(theta, phi, expected):
    assert angular_correlation(theta, phi) == pytest.approx(expected, abs=1e-15)


def test_branches_agree_at_shared_point():
    assert abs(angular_correlation_pinhole(math.pi) - angular_correlation_collinear(0.0)) <= 1e-12


def test_angular_correlation_off_slice_raises():
    with pytest.raises(UnsupportedGeometryError):
        angular_correlation(math.pi / 2, 0.3)


@pytest.mark.parametrize("angle, expected", [(300, 120), (-120, 60), (0, 0), (180, 0), (-1e-20, 0)])
def test_canonicalize_examples(angle, expected):
    assert canonicalize_angle(angle) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("bad", [float("inf"), float("-inf"), float("nan")])
def test_canonicalize_rejects_non_finite(bad):
    with pytest.raises(DomainError):
        canonicalize_angle(bad)


@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
def test_canonicalize_range_and_congruence(angle):
    c = canonicalize_angle(angle)
    assert 0.0 <= c < 180.0
    k = (angle - c) / 180.0
    assert abs(k - round(k)) < 1e-9


def test_geometry_omega_invariant():
    geo = DetectionGeometry.from_degrees(180.0, 60.0)
    assert geo.omega == pytest.approx(2 * math.pi * (1 - math.cos(geo.phi)))
    assert geo.supported
    assert not DetectionGeometry.from_degrees(90.0, 10.0).supported
