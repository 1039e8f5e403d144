"""Actuation chain: pulse-width servo axes, PID steering and the supervisor.

The PID law outputs an angular-rate command. The controller integrates it
into an angle setpoint, encodes that as a servo pulse width, and the servo
slews toward the decoded angle at no more than ``max_speed``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import raise_if
from .geometry import Direction, Position3, position_to_direction, wrap_angle
from .tracking import TrackEvent, TrackState, TrackStatus
from .vision import CameraModel, pixel_ray

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ServoAxisParams:
    pulse_min_us: float = 1000.0
    pulse_max_us: float = 2000.0
    angle_min: float = -math.pi / 2
    angle_max: float = math.pi / 2
    max_speed: float = math.pi
    sensor_noise_sigma: float = 0.0

    def __post_init__(self):
        raise_if(self.problems())

    def problems(self):
        out = []
        if not self.pulse_min_us < self.pulse_max_us:
            out.append(
                (
                    ("pulse_min_us", "pulse_max_us"),
                    f"pulse_min_us ({self.pulse_min_us!r}) must be < pulse_max_us ({self.pulse_max_us!r})",
                )
            )
        if not self.angle_min < self.angle_max:
            out.append((("angle_min", "angle_max"), "angle_min must be < angle_max"))
        if not self.max_speed > 0:
            out.append((("max_speed",), f"must be > 0, got {self.max_speed!r}"))
        if not self.sensor_noise_sigma >= 0:
            out.append((("sensor_noise_sigma",), f"must be >= 0, got {self.sensor_noise_sigma!r}"))
        return out


class ServoAxis:
    """One gimbal axis: linear pulse map, slew limit and a noisy angle sensor."""

    def __init__(self, params: ServoAxisParams, current_angle: float = 0.0, rng=None):
        self.params = params
        if not params.angle_min <= current_angle <= params.angle_max:
            raise ValueError(
                f"initial angle {current_angle!r} outside [{params.angle_min}, {params.angle_max}]"
            )
        self.current_angle = float(current_angle)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.clamp_events = 0

    def pulse_to_angle(self, pulse_us: float) -> float:
        p = self.params
        if not p.pulse_min_us <= pulse_us <= p.pulse_max_us:
            self.clamp_events += 1
            log.warning("pulse %.3f us outside [%g, %g], clamped", pulse_us, p.pulse_min_us, p.pulse_max_us)
            pulse_us = min(max(pulse_us, p.pulse_min_us), p.pulse_max_us)
        frac = (pulse_us - p.pulse_min_us) / (p.pulse_max_us - p.pulse_min_us)
        return p.angle_min + frac * (p.angle_max - p.angle_min)

    def angle_to_pulse(self, angle: float) -> float:
        p = self.params
        frac = (angle - p.angle_min) / (p.angle_max - p.angle_min)
        return p.pulse_min_us + frac * (p.pulse_max_us - p.pulse_min_us)

    def clamp(self, angle: float) -> float:
        return min(max(angle, self.params.angle_min), self.params.angle_max)

    def step(self, target_angle: float, dt: float) -> float:
        """Slew toward ``target_angle`` for ``dt`` seconds; returns the new angle."""
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt!r}")
        target = self.clamp(target_angle)
        max_move = self.params.max_speed * dt
        delta = target - self.current_angle
        if abs(delta) <= max_move:
            self.current_angle = target
        else:
            self.current_angle += math.copysign(max_move, delta)
        return self.current_angle

    def command_pulse(self, pulse_us: float, dt: float) -> float:
        return self.step(self.pulse_to_angle(pulse_us), dt)

    def read(self) -> float:
        sigma = self.params.sensor_noise_sigma
        if sigma == 0.0:
            return self.current_angle
        return self.current_angle + float(self.rng.normal(0.0, sigma))


def pulse_to_angle(axis: ServoAxis, pulse_us: float) -> float:
    return axis.pulse_to_angle(pulse_us)


def servo_step(axis: ServoAxis, target_angle: float, dt: float) -> float:
    return axis.step(target_angle, dt)


@dataclass(frozen=True)
class PidParams:
    kp: float = 4.0
    ki: float = 0.5
    kd: float = 0.1
    output_limit: float = math.pi  # rad/s
    integral_limit: float = 0.05  # rad*s

    def __post_init__(self):
        raise_if(self.problems())

    def problems(self):
        out = []
        for name in ("kp", "ki", "kd"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                out.append(((name,), f"must be a finite gain >= 0, got {v!r}"))
        for name in ("output_limit", "integral_limit"):
            v = getattr(self, name)
            if not v > 0:
                out.append(((name,), f"must be > 0, got {v!r}"))
        return out


@dataclass
class PidState:
    params: PidParams = field(default_factory=PidParams)
    integral: float = 0.0
    prev_error: Optional[float] = None

    def reset(self) -> None:
        self.integral = 0.0
        self.prev_error = None

    def step(self, error: float, dt: float) -> float:
        """One PID update returning a rate command clamped to the output limit.

        The derivative term is zero on the first call after a reset. While the
        output saturates the integral is frozen.
        """
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt!r}")
        p = self.params
        deriv = 0.0 if self.prev_error is None else (error - self.prev_error) / dt
        integral = self.integral + error * dt
        integral = min(max(integral, -p.integral_limit), p.integral_limit)
        raw = p.kp * error + p.ki * integral + p.kd * deriv
        if abs(raw) > p.output_limit:
            raw = p.kp * error + p.ki * self.integral + p.kd * deriv
        else:
            self.integral = integral
        self.prev_error = error
        return min(max(raw, -p.output_limit), p.output_limit)


def pid_step(pid: PidState, error: float, dt: float) -> float:
    return pid.step(error, dt)


class Mode(str, enum.Enum):
    SCANNING = "scanning"
    TRACKING = "tracking"


@dataclass(frozen=True)
class SteeringReference:
    """The locked track at one processed frame, extrapolated in time.

    The filtered pixel position is advanced with the filtered pixel velocity
    and back-projected through the camera pose of that frame.
    """

    time: float
    camera: CameraModel
    u: float
    v: float
    du: float
    dv: float

    def at(self, t: float) -> Direction:
        tau = t - self.time
        ray = pixel_ray(self.camera, self.u + self.du * tau, self.v + self.dv * tau)
        d, _ = position_to_direction(Position3.from_array(ray))
        return d

    def rate(self, t: float, h: float = 1e-3) -> tuple[float, float]:
        """Angular rate (az, el) of the reference at ``t``, in rad/s."""
        a, b = self.at(t - h), self.at(t + h)
        return wrap_angle(b.azimuth - a.azimuth) / (2 * h), (b.elevation - a.elevation) / (2 * h)


@dataclass
class SupervisorState:
    """SCAN/TRACK state machine.

    Scanning with nothing in view, the camera is consulted once every
    ``scan_period``. While any track is alive, and for one ``scan_period``
    after the last one disappears, every frame is processed. The first
    confirmed track is latched as the user; losing it returns to scanning on
    the frame it is deleted.
    """

    scan_period: float = 0.5
    mode: Mode = Mode.SCANNING
    locked_track_id: Optional[int] = None
    frames_since_seen: int = 0
    last_scan_time: Optional[float] = None
    last_active_time: Optional[float] = None
    last_time: Optional[float] = None
    reference: Optional[SteeringReference] = None

    def __post_init__(self):
        if not self.scan_period > 0:
            raise ValueError(f"scan_period must be > 0, got {self.scan_period!r}")

    def check(self) -> None:
        if (self.locked_track_id is not None) != (self.mode is Mode.TRACKING):
            raise AssertionError("locked_track_id must be set exactly when tracking")

    def wants_frame(self, now: float, tracks_alive: bool) -> bool:
        """Whether the camera frame arriving at ``now`` should be processed."""
        if self.mode is Mode.TRACKING or tracks_alive:
            self.last_active_time = now
            return True
        eps = 1e-9
        if self.last_active_time is not None and now - self.last_active_time < self.scan_period - eps:
            return True
        return self.last_scan_time is None or now - self.last_scan_time >= self.scan_period - eps

    def step(
        self,
        confirmed: Sequence[TrackState],
        events: Sequence[TrackEvent],
        now: float,
        camera: CameraModel,
    ) -> tuple[Mode, Optional[Direction]]:
        """Consume one processed frame of tracker output.

        Returns the mode after the frame and, when tracking, the steering
        target at ``now`` taken from the locked track's filtered position.
        """
        if self.last_time is not None and now < self.last_time:
            raise ValueError("supervisor time must be non-decreasing")
        self.last_time = now
        if self.mode is Mode.SCANNING:
            self.last_scan_time = now

        if self.mode is Mode.TRACKING:
            lost = any(e.track_id == self.locked_track_id and e.status is TrackStatus.DELETED for e in events)
            if lost:
                self.mode = Mode.SCANNING
                self.locked_track_id = None
                self.frames_since_seen = 0
                self.reference = None
                return self.mode, None
        elif confirmed:
            pick = min(confirmed, key=lambda t: (-t.hits, t.track_id))
            self.mode = Mode.TRACKING
            self.locked_track_id = pick.track_id

        if self.mode is Mode.SCANNING:
            return self.mode, None

        track = next((t for t in confirmed if t.track_id == self.locked_track_id), None)
        if track is None:  # pragma: no cover - confirmed tracks are never demoted
            raise AssertionError("locked track missing from confirmed list")
        self.frames_since_seen = track.time_since_update
        u, v, du, dv = (float(x) for x in track.mean)
        self.reference = SteeringReference(now, camera, u, v, du, dv)
        return self.mode, self.reference.at(now)


def supervisor_step(sup: SupervisorState, confirmed, events, now: float, camera: CameraModel):
    return sup.step(confirmed, events, now, camera)


@dataclass
class SteeringController:
    azimuth: PidState = field(default_factory=PidState)
    elevation: PidState = field(default_factory=PidState)

    def reset(self) -> None:
        self.azimuth.reset()
        self.elevation.reset()

    def steer(self, current: Direction, target: Direction, dt: float) -> tuple[float, float]:
        """Per-axis rate commands (rad/s) driving ``current`` toward ``target``."""
        err_az = wrap_angle(target.azimuth - current.azimuth)
        err_el = target.elevation - current.elevation
        return self.azimuth.step(err_az, dt), self.elevation.step(err_el, dt)


def steer(controller: SteeringController, current: Direction, target: Direction, dt: float):
    return controller.steer(current, target, dt)
