"""Discrete-time scenario runner.

One run is a fixed-step loop at ``control_rate_hz``. Camera frames fire on
their own cadence and are snapped to the nearest control tick. Per tick the
loop advances the user, optionally processes a frame (detect, track,
supervise), steers the gimbal, then evaluates the link budget for the
boresight the antenna had at the start of the tick.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import channel
from .control import Mode, ServoAxis, SteeringController, PidState, SupervisorState
from .geometry import Direction, angular_separation, position_to_direction, wrap_angle
from .scenario import AntennaMode, ScenarioConfig
from .tracking import Tracker, TrackSnapshot
from .vision import reproject, synth_detect

SERVO_STREAM = 0x5E7


@dataclass(frozen=True)
class StepRecord:
    """One control tick. Field order is the CSV column order."""

    t: float
    user_x: float
    user_y: float
    user_z: float
    user_azimuth: float
    user_elevation: float
    user_range: float
    mode: str
    locked_track_id: Optional[int]
    boresight_azimuth: float
    boresight_elevation: float
    pointing_error: float
    tx_gain_dbi: float
    fspl_db: float
    prx_dbm: float
    snr_db: float
    ber: float
    frame_index: int
    pulse_azimuth_us: float
    pulse_elevation_us: float
    sensor_azimuth: float
    sensor_elevation: float
    steer_error_azimuth: float
    steer_error_elevation: float

    @property
    def user_direction(self) -> Direction:
        return Direction(self.user_azimuth, self.user_elevation)

    @property
    def boresight(self) -> Direction:
        return Direction(self.boresight_azimuth, self.boresight_elevation)


RECORD_COLUMNS = tuple(f.name for f in fields(StepRecord))


@dataclass(frozen=True)
class DetectionRow:
    frame: int
    t: float
    center_u: float
    center_v: float
    box_w: float
    box_h: float
    confidence: float


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    records: list[StepRecord]
    detections: list[DetectionRow] = field(default_factory=list)
    track_history: list[TrackSnapshot] = field(default_factory=list)
    frames_captured: int = 0
    frames_processed: int = 0
    pulse_clamps: int = 0

    @property
    def summary(self) -> dict:
        return summarize(self.records)


def _frame_schedule(cfg: ScenarioConfig) -> dict[int, tuple[int, float]]:
    """Map control tick -> (frame index, frame time snapped to that tick)."""
    fr = cfg.camera.frame_rate_hz
    schedule = {}
    for k in range(cfg.frame_count):
        tk = k / fr
        i = int(round(tk * cfg.control_rate_hz))
        if i < cfg.tick_count:
            schedule[i] = (k, i / cfg.control_rate_hz)
    return schedule


def _initial_boresight(cfg: ScenarioConfig) -> Direction:
    if cfg.antenna_mode is AntennaMode.FIXED:
        return cfg.fixed_direction
    if cfg.initial_pointing is not None:
        return cfg.initial_pointing
    d, _ = position_to_direction(cfg.trajectory.position(0.0))
    az = min(max(d.azimuth, cfg.servo_azimuth.angle_min), cfg.servo_azimuth.angle_max)
    el = min(max(d.elevation, cfg.servo_elevation.angle_min), cfg.servo_elevation.angle_max)
    return Direction(az, el)


def _clamp_el(x: float) -> float:
    return min(max(x, -math.pi / 2), math.pi / 2)


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    dt = 1.0 / cfg.control_rate_hz
    rotatable = cfg.antenna_mode is AntennaMode.ROTATABLE
    schedule = _frame_schedule(cfg)
    start = _initial_boresight(cfg)

    az_axis = ServoAxis(cfg.servo_azimuth, start.azimuth, np.random.default_rng([cfg.seed, SERVO_STREAM, 0]))
    el_axis = ServoAxis(cfg.servo_elevation, start.elevation, np.random.default_rng([cfg.seed, SERVO_STREAM, 1]))
    setpoint = [az_axis.current_angle, el_axis.current_angle]

    tracker = Tracker(cfg.tracker)
    sup = SupervisorState(scan_period=cfg.scan_period)
    ctrl = SteeringController(PidState(cfg.pid_azimuth), PidState(cfg.pid_elevation))
    det_params = replace(cfg.detector, rng_seed=cfg.seed)

    result = ScenarioResult(cfg, [])
    last_cam = None
    last_frame_t = None
    reference = None

    for i in range(cfg.tick_count):
        t = i * dt
        p = cfg.trajectory.position(t)
        user_dir, user_range = position_to_direction(p)
        boresight = Direction(az_axis.current_angle, el_axis.current_angle)
        sensed = Direction(az_axis.read(), _clamp_el(el_axis.read()))

        frame_index = -1
        frame = schedule.get(i)
        if frame is not None:
            result.frames_captured += 1
            k, tk = frame
            if sup.wants_frame(tk, tracker.has_live_tracks):
                frame_index = k
                result.frames_processed += 1
                dets = synth_detect(cfg.camera.mounted(boresight), det_params, [p], k)
                cam = cfg.camera.mounted(sensed)
                if last_cam is not None and last_cam.mount_direction != cam.mount_direction:
                    prev = last_cam
                    tracker.warp(lambda u, v: reproject(prev, cam, u, v))
                frame_dt = tk - last_frame_t if last_frame_t is not None else 1.0 / cfg.camera.frame_rate_hz
                confirmed, events = tracker.step(dets, frame_dt)
                mode, _ = sup.step(confirmed, events, tk, cam)
                sup.check()
                last_cam, last_frame_t = cam, tk
                result.detections.extend(
                    DetectionRow(k, tk, d.center_u, d.center_v, d.box_w, d.box_h, d.confidence) for d in dets
                )
                result.track_history.extend(tracker.history)
                if mode is Mode.SCANNING:
                    if reference is not None:
                        ctrl.reset()
                    reference = None
                else:
                    reference = sup.reference

        err_az = err_el = math.nan
        if rotatable and reference is not None:
            target = reference.at(t)
            ff_az, ff_el = reference.rate(t)
            err_az = wrap_angle(target.azimuth - sensed.azimuth)
            err_el = target.elevation - sensed.elevation
            cmd_az, cmd_el = ctrl.steer(sensed, target, dt)
            setpoint[0] = az_axis.clamp(setpoint[0] + (cmd_az + ff_az) * dt)
            setpoint[1] = el_axis.clamp(setpoint[1] + (cmd_el + ff_el) * dt)
        pulse_az = az_axis.angle_to_pulse(setpoint[0])
        pulse_el = el_axis.angle_to_pulse(setpoint[1])

        psi = angular_separation(boresight, user_dir)
        gain = cfg.pattern.gain_dbi(psi)
        loss = channel.fspl_db(cfg.link.carrier_hz, user_range)
        prx = channel.received_power_dbm(cfg.link, gain, 0.0, user_range)  # isotropic user
        snr = channel.snr_db(cfg.link, prx)
        ber = channel.ber_16qam(channel.ebn0_db(cfg.link, snr))
        result.records.append(
            StepRecord(
                t=t,
                user_x=p.x,
                user_y=p.y,
                user_z=p.z,
                user_azimuth=user_dir.azimuth,
                user_elevation=user_dir.elevation,
                user_range=user_range,
                mode=sup.mode.value,
                locked_track_id=sup.locked_track_id,
                boresight_azimuth=boresight.azimuth,
                boresight_elevation=boresight.elevation,
                pointing_error=psi,
                tx_gain_dbi=gain,
                fspl_db=loss,
                prx_dbm=prx,
                snr_db=snr,
                ber=ber,
                frame_index=frame_index,
                pulse_azimuth_us=pulse_az,
                pulse_elevation_us=pulse_el,
                sensor_azimuth=sensed.azimuth,
                sensor_elevation=sensed.elevation,
                steer_error_azimuth=err_az,
                steer_error_elevation=err_el,
            )
        )

        az_axis.command_pulse(pulse_az, dt)
        el_axis.command_pulse(pulse_el, dt)

    result.pulse_clamps = az_axis.clamp_events + el_axis.clamp_events
    return result


def summarize(records: Sequence[StepRecord], power_average: str = "db") -> dict:
    """Headline metrics of a run.

    Received-power mean is an arithmetic mean of dBm values by default;
    ``power_average="mw"`` averages in milliwatts instead. Min, max and
    standard deviation are always taken on the dBm values.
    """
    if not records:
        raise ValueError("cannot summarise an empty record list")
    if power_average not in ("db", "mw"):
        raise ValueError(f"power_average must be 'db' or 'mw', got {power_average!r}")
    prx = np.array([r.prx_dbm for r in records])
    err = np.array([r.pointing_error for r in records])
    tracking = [r.mode == Mode.TRACKING.value for r in records]
    if power_average == "db":
        mean = float(prx.mean())
    else:
        mean = float(10.0 * np.log10(np.mean(10.0 ** (prx / 10.0))))
    lock_t = next((r.t for r, on in zip(records, tracking) if on), None)
    return {
        "ticks": len(records),
        "prx_mean_dbm": mean,
        "prx_min_dbm": float(prx.min()),
        "prx_max_dbm": float(prx.max()),
        "prx_std_db": float(prx.std()),
        "pointing_error_p50_rad": float(np.percentile(err, 50)),
        "pointing_error_p95_rad": float(np.percentile(err, 95)),
        "pointing_error_max_rad": float(err.max()),
        "tracking_fraction": sum(tracking) / len(records),
        "lock_acquisition_s": lock_t,
    }


@dataclass(frozen=True)
class CompareRow:
    tick: int
    t: float
    user_azimuth: float
    user_elevation: float
    prx_ra_dbm: float
    prx_fixed_dbm: float
    gain_db: float
    pointing_error_ra: float
    pointing_error_fixed: float
    mode_ra: str


COMPARE_COLUMNS = tuple(f.name for f in fields(CompareRow))


@dataclass
class Comparison:
    rows: list[CompareRow]
    summary: dict
    rotatable: ScenarioResult
    fixed: ScenarioResult


def compare_modes(cfg: ScenarioConfig) -> Comparison:
    """Run the same trajectory and seed with a rotatable and a fixed antenna."""
    ra = run_scenario(replace(cfg, antenna_mode=AntennaMode.ROTATABLE))
    fx = run_scenario(replace(cfg, antenna_mode=AntennaMode.FIXED))
    rows = [
        CompareRow(
            tick=i,
            t=a.t,
            user_azimuth=a.user_azimuth,
            user_elevation=a.user_elevation,
            prx_ra_dbm=a.prx_dbm,
            prx_fixed_dbm=b.prx_dbm,
            gain_db=a.prx_dbm - b.prx_dbm,
            pointing_error_ra=a.pointing_error,
            pointing_error_fixed=b.pointing_error,
            mode_ra=a.mode,
        )
        for i, (a, b) in enumerate(zip(ra.records, fx.records))
    ]
    s_ra, s_fx = summarize(ra.records), summarize(fx.records)
    summary = {
        "prx_mean_ra_dbm": s_ra["prx_mean_dbm"],
        "prx_mean_fixed_dbm": s_fx["prx_mean_dbm"],
        "prx_min_ra_dbm": s_ra["prx_min_dbm"],
        "prx_min_fixed_dbm": s_fx["prx_min_dbm"],
        "power_gain_db": s_ra["prx_mean_dbm"] - s_fx["prx_mean_dbm"],
        "pointing_error_max_ra_rad": s_ra["pointing_error_max_rad"],
        "pointing_error_max_fixed_rad": s_fx["pointing_error_max_rad"],
        "lock_acquisition_s": s_ra["lock_acquisition_s"],
    }
    return Comparison(rows, summary, ra, fx)


def run_batch(
    configs: Sequence[ScenarioConfig],
    fn: Callable[[ScenarioConfig], object] = run_scenario,
    jobs: int = 1,
) -> list:
    """Run independent scenarios, results ordered by input index."""
    if jobs <= 1 or len(configs) <= 1:
        return [fn(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, configs))
