"""Scenario description: user trajectories and the full experiment config."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .antenna import RadiationPattern
from .channel import LinkParams
from .control import PidParams, ServoAxisParams
from .errors import raise_if
from .geometry import Direction, Position3
from .tracking import TrackerParams
from .vision import CameraModel, DetectorParams


@dataclass(frozen=True)
class ArcSweep:
    """User on a circle of constant range and elevation, sweeping azimuth.

    The azimuth moves from ``az_start`` toward ``az_end`` at ``angular_rate``
    (a speed, always >= 0) and then holds at ``az_end``.
    """

    radius: float = 10.0
    elevation: float = 0.0
    az_start: float = -math.pi / 2
    az_end: float = math.pi / 2
    angular_rate: float = math.pi / 20

    kind = "arc_sweep"

    def __post_init__(self):
        raise_if(self.problems())

    def problems(self):
        out = []
        if not self.radius > 0:
            out.append((("radius",), f"must be > 0, got {self.radius!r}"))
        if not abs(self.elevation) <= math.pi / 2:
            out.append((("elevation",), "must lie in [-90, 90] deg"))
        if not self.angular_rate >= 0:
            out.append((("angular_rate",), f"must be >= 0, got {self.angular_rate!r}"))
        return out

    def azimuth_at(self, t: float) -> float:
        span = self.az_end - self.az_start
        travelled = min(self.angular_rate * t, abs(span))
        return self.az_start + math.copysign(travelled, span)

    def position(self, t: float) -> Position3:
        # build from the unwrapped azimuth so az_end = pi stays reachable
        el = self.elevation
        az = self.azimuth_at(t)
        r = self.radius
        return Position3(r * math.cos(el) * math.cos(az), r * math.cos(el) * math.sin(az), r * math.sin(el))


@dataclass(frozen=True)
class LinearWalk:
    start: Position3 = Position3(10.0, -5.0, 0.0)
    end: Position3 = Position3(10.0, 5.0, 0.0)
    speed: float = 1.0

    kind = "linear_walk"

    def __post_init__(self):
        raise_if(self.problems())

    def problems(self):
        if not self.speed >= 0:
            return [(("speed",), f"must be >= 0, got {self.speed!r}")]
        return []

    def position(self, t: float) -> Position3:
        a, b = self.start.as_array(), self.end.as_array()
        length = float(np.linalg.norm(b - a))
        if length == 0.0:
            return self.start
        s = min(self.speed * t, length) / length
        return Position3.from_array(a + s * (b - a))


@dataclass(frozen=True)
class Waypoints:
    """Piecewise-linear path through timed positions, held at both ends."""

    times: tuple[float, ...] = (0.0,)
    positions: tuple[Position3, ...] = (Position3(10.0, 0.0, 0.0),)

    kind = "waypoints"

    def __post_init__(self):
        raise_if(self.problems())

    def problems(self):
        out = []
        if len(self.times) == 0 or len(self.times) != len(self.positions):
            out.append((("times", "positions"), "need the same, non-zero number of times and positions"))
        elif any(b <= a for a, b in zip(self.times, self.times[1:])):
            out.append((("times",), "waypoint times must be strictly increasing"))
        return out

    def position(self, t: float) -> Position3:
        xs = np.array([p.as_array() for p in self.positions])
        return Position3(*(float(np.interp(t, self.times, xs[:, k])) for k in range(3)))


TrajectorySpec = Union[ArcSweep, LinearWalk, Waypoints]


def advance_trajectory(spec: TrajectorySpec, t: float, duration: Optional[float] = None) -> Position3:
    if t < 0 or (duration is not None and t > duration + 1e-9):
        raise ValueError(f"time {t!r} outside [0, {duration}]")
    return spec.position(t)


class AntennaMode(str, enum.Enum):
    ROTATABLE = "rotatable"
    FIXED = "fixed"


@dataclass(frozen=True)
class ScenarioConfig:
    duration: float = 20.0
    control_rate_hz: float = 50.0
    seed: int = 0
    camera: CameraModel = field(default_factory=CameraModel)
    detector: DetectorParams = field(default_factory=DetectorParams)
    tracker: TrackerParams = field(default_factory=TrackerParams)
    servo_azimuth: ServoAxisParams = field(default_factory=lambda: ServoAxisParams(sensor_noise_sigma=0.001))
    servo_elevation: ServoAxisParams = field(
        default_factory=lambda: ServoAxisParams(
            angle_min=-math.pi / 4, angle_max=math.pi / 4, sensor_noise_sigma=0.001
        )
    )
    pid_azimuth: PidParams = field(default_factory=PidParams)
    pid_elevation: PidParams = field(default_factory=PidParams)
    scan_period: float = 0.5
    pattern: RadiationPattern = field(default_factory=RadiationPattern)
    link: LinkParams = field(default_factory=LinkParams)
    trajectory: TrajectorySpec = field(default_factory=ArcSweep)
    antenna_mode: AntennaMode = AntennaMode.ROTATABLE
    fixed_direction: Direction = field(default_factory=Direction)
    # None: the rotatable antenna starts aimed at the user's initial bearing
    initial_pointing: Optional[Direction] = None

    def __post_init__(self):
        raise_if(self.problems())

    def problems(self):
        out = []
        if not (isinstance(self.duration, (int, float)) and self.duration > 0):
            out.append((("duration",), f"must be > 0, got {self.duration!r}"))
        if not (isinstance(self.seed, int) and self.seed >= 0):
            out.append((("seed",), f"must be an integer >= 0, got {self.seed!r}"))
        if not self.control_rate_hz > 0:
            out.append((("control_rate_hz",), f"must be > 0, got {self.control_rate_hz!r}"))
        elif self.control_rate_hz < self.camera.frame_rate_hz:
            out.append(
                (
                    ("control_rate_hz", "camera.frame_rate_hz"),
                    "control rate must be >= camera frame rate",
                )
            )
        if not self.scan_period > 0:
            out.append((("scan_period",), f"must be > 0, got {self.scan_period!r}"))
        for name, d in (("fixed_direction", self.fixed_direction), ("initial_pointing", self.initial_pointing)):
            if d is None:
                continue
            if not self.servo_azimuth.angle_min <= d.azimuth <= self.servo_azimuth.angle_max:
                out.append(((f"{name}.azimuth",), "outside the azimuth servo range"))
            if not self.servo_elevation.angle_min <= d.elevation <= self.servo_elevation.angle_max:
                out.append(((f"{name}.elevation",), "outside the elevation servo range"))
        return out

    @property
    def tick_count(self) -> int:
        return int(math.floor(self.duration * self.control_rate_hz + 1e-9)) + 1

    @property
    def frame_count(self) -> int:
        return int(math.floor(self.duration * self.camera.frame_rate_hz + 1e-9)) + 1

