"""Angle and direction arithmetic.

Conventions used throughout the package:

* World frame is right-handed with the transmitter at the origin, ``x`` along
  the reference boresight axis and ``z`` up.
* ``azimuth`` is measured in the horizontal plane from ``+x``, positive
  counter-clockwise seen from above, wrapped into ``[-pi, pi)``.
* ``elevation`` is measured from the horizontal plane, positive up, in
  ``[-pi/2, pi/2]``. A user "at zenith angle 0" in the experiment sense is a
  user in the antenna's horizontal plane, i.e. ``elevation == 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle into ``[-pi, pi)``."""
    if not math.isfinite(a):
        raise ValueError(f"angle must be finite, got {a!r}")
    if -math.pi <= a < math.pi:
        return float(a)  # already wrapped; keep it bit-exact
    w = math.fmod(a + math.pi, TWO_PI)
    if w < 0.0:
        w += TWO_PI
    w -= math.pi
    # fmod + shift can land on +pi through rounding
    if w >= math.pi:
        w -= TWO_PI
    return w


@dataclass(frozen=True)
class Direction:
    """Azimuth/elevation pair in radians. Azimuth is wrapped on construction."""

    azimuth: float = 0.0
    elevation: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.elevation):
            raise ValueError(f"elevation must be finite, got {self.elevation!r}")
        if abs(self.elevation) > HALF_PI:
            raise ValueError(f"elevation must lie in [-pi/2, pi/2], got {self.elevation!r}")
        object.__setattr__(self, "azimuth", wrap_angle(float(self.azimuth)))
        object.__setattr__(self, "elevation", float(self.elevation))

    @classmethod
    def from_degrees(cls, azimuth_deg: float, elevation_deg: float = 0.0) -> "Direction":
        return cls(math.radians(azimuth_deg), math.radians(elevation_deg))

    def unit(self) -> "Position3":
        return direction_to_unit(self)


@dataclass(frozen=True)
class Position3:
    """Cartesian point or vector in meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def from_array(cls, a) -> "Position3":
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def scaled(self, k: float) -> "Position3":
        return Position3(self.x * k, self.y * k, self.z * k)


def direction_to_unit(d: Direction) -> Position3:
    ce = math.cos(d.elevation)
    return Position3(ce * math.cos(d.azimuth), ce * math.sin(d.azimuth), math.sin(d.elevation))


def position_to_direction(p: Position3) -> tuple[Direction, float]:
    """Bearing and range of ``p`` seen from the origin.

    At the poles the azimuth is not identifiable and is reported as 0.
    """
    horiz = math.hypot(p.x, p.y)
    rng = math.hypot(horiz, p.z)
    if rng == 0.0:
        raise ValueError("bearing undefined for a zero-length vector")
    el = math.atan2(p.z, horiz)
    az = math.atan2(p.y, p.x) if horiz > 0.0 else 0.0
    return Direction(az, el), rng


def angular_separation(d1: Direction, d2: Direction) -> float:
    """Great-circle angle between two directions, in ``[0, pi]``."""
    u1 = direction_to_unit(d1)
    u2 = direction_to_unit(d2)
    dot = u1.x * u2.x + u1.y * u2.y + u1.z * u2.z
    # atan2 of |cross| and dot stays accurate near 0 and pi, where acos of a
    # clamped dot product loses about 1e-8 rad
    cx = u1.y * u2.z - u1.z * u2.y
    cy = u1.z * u2.x - u1.x * u2.z
    cz = u1.x * u2.y - u1.y * u2.x
    return math.atan2(math.sqrt(cx * cx + cy * cy + cz * cz), dot)
