"""Analyzer-angle handling and the cascade detection geometry.

Radians are used internally; every public function taking a polarizer
setting accepts degrees, because that is what config files and the CLI carry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, UnsupportedGeometryError

# Slice membership tolerance for theta == pi and phi == 0.
SLICE_TOL = 1e-12


def canonicalize_angle(angle: float) -> float:
    """Reduce a polarizer setting in degrees to [0, 180).

    Every prediction depends on settings only through cos 2(difference), so
    settings are defined modulo 180 degrees.
    """
    if not math.isfinite(angle):
        raise DomainError(f"angle must be finite, got {angle!r}")
    reduced = math.fmod(angle, 180.0)
    if reduced < 0.0:
        reduced += 180.0
    # fmod of a tiny negative number can round up to exactly 180
    if reduced >= 180.0:
        reduced -= 180.0
    return reduced


def solid_angle(phi: float) -> float:
    """Solid angle in steradians of a circular aperture with half-angle ``phi`` (radians)."""
    if not (0.0 <= phi <= math.pi):
        raise DomainError(f"aperture half-angle must lie in [0, pi], got {phi!r}")
    return 2.0 * math.pi * (1.0 - math.cos(phi))


def _is_collinear(theta: float) -> bool:
    return abs(theta - math.pi) <= SLICE_TOL


def _is_pinhole(phi: float) -> bool:
    return abs(phi) <= SLICE_TOL


def angular_correlation(theta: float, phi: float) -> float:
    """Angular correlation g(theta, phi) of the J=1 -> J=0 cascade pair.

    Only two slices are known in closed form: point detectors (``phi = 0``,
    any ``theta``) and back-to-back detectors (``theta = pi``, any ``phi``).
    Anything else raises :class:`UnsupportedGeometryError`.
    """
    if not (0.0 <= phi <= math.pi):
        raise DomainError(f"aperture half-angle must lie in [0, pi], got {phi!r}")
    if _is_collinear(theta):
        c = math.cos(phi)
        return 1.0 + 0.125 * c * c * (1.0 + c) ** 2
    if _is_pinhole(phi):
        c = math.cos(theta)
        return 0.75 * (1.0 + c * c)
    raise UnsupportedGeometryError(
        f"g(theta, phi) is only available for phi = 0 or theta = pi; "
        f"got theta={theta!r}, phi={phi!r}"
    )


def angular_correlation_pinhole(theta: float) -> float:
    """The ``phi = 0`` branch alone, for cross-checking at theta = pi."""
    c = math.cos(theta)
    return 0.75 * (1.0 + c * c)


def angular_correlation_collinear(phi: float) -> float:
    """The ``theta = pi`` branch alone, for cross-checking at phi = 0."""
    c = math.cos(phi)
    return 1.0 + 0.125 * c * c * (1.0 + c) ** 2


@dataclass(frozen=True)
class DetectionGeometry:
    """Detector axis separation ``theta`` and aperture half-angle ``phi``, both radians."""

    theta: float = math.pi
    phi: float = math.radians(30.0)

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise DomainError(f"theta must be finite, got {self.theta!r}")
        if not (0.0 <= self.phi <= math.pi):
            raise DomainError(f"phi must lie in [0, pi], got {self.phi!r}")

    @classmethod
    def from_degrees(cls, theta_deg: float = 180.0, phi_deg: float = 30.0) -> "DetectionGeometry":
        return cls(theta=math.radians(theta_deg), phi=math.radians(phi_deg))

    @property
    def omega(self) -> float:
        return solid_angle(self.phi)

    @property
    def supported(self) -> bool:
        return _is_collinear(self.theta) or _is_pinhole(self.phi)

    def correlation(self) -> float:
        return angular_correlation(self.theta, self.phi)
