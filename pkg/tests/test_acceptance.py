"""The nine acceptance criteria, each at its stated tolerance.

Every test prints one PASS/FAIL line; the lines are repeated in the
"acceptance criteria" section of the pytest terminal summary.
"""

import hashlib
import math
import subprocess
import sys
from pathlib import Path

import numpy as np

from conftest import noiseless
from oracles import (
    brute_force_matching,
    friis_fspl_db,
    mc_ber_16qam,
    scalar_kalman_update,
)
from rasim.antenna import RadiationPattern
from rasim.channel import LinkParams, ber_16qam, fspl_db, received_power_dbm
from rasim.control import PidParams, PidState, ServoAxis, ServoAxisParams
from rasim.engine import run_scenario
from rasim.geometry import Direction, Position3, angular_separation, position_to_direction
from rasim.scenario import ArcSweep, ScenarioConfig, Waypoints
from rasim.tracking import TrackerParams, TrackState, TrackStatus, kf_update, min_cost_matching
from rasim.vision import CameraModel, Detection, DetectorParams, pixel_to_direction, project

ROOT = Path(__file__).resolve().parents[1]


def test_1_power_curve_shape(criterion, slow_sweep_comparison):
    with criterion("1", "power curve shape on a noiseless +-90 deg sweep") as c:
        rows = slow_sweep_comparison.rows
        az = np.array([r.user_azimuth for r in rows])
        ra = np.array([r.prx_ra_dbm for r in rows])
        fx = np.array([r.prx_fixed_dbm for r in rows])
        assert az[0] == -math.pi / 2 and np.all(np.diff(az) >= 0)

        spread = ra.max() - ra.min()
        peak = int(np.argmax(fx))
        top = fx[peak]
        drop30 = [top - np.interp(math.radians(s * 30.0), az, fx) for s in (-1, 1)]
        drop90 = [top - np.interp(s * math.pi / 2, az, fx) for s in (-1, 1)]
        c.detail = (
            f"RA spread {spread:.2g} dB, fixed drop at -30/+30 {drop30[0]:.3f}/{drop30[1]:.3f} dB, "
            f"at -90/+90 {drop90[0]:.3f}/{drop90[1]:.3f} dB"
        )
        assert spread < 1.0
        assert abs(az[peak]) == np.min(np.abs(az))
        assert np.all(np.diff(fx[: peak + 1]) >= 0) and np.all(np.diff(fx[peak:]) <= 0)
        for d in drop30:
            assert abs(d - 3.0) <= 0.05
        for d in drop90:
            assert abs(d - 20.0) <= 0.5


def test_2_rotatable_dominates_every_tick(criterion, slow_sweep_comparison):
    with criterion("2", "rotatable >= fixed received power on every tick") as c:
        margin = min(r.prx_ra_dbm - r.prx_fixed_dbm for r in slow_sweep_comparison.rows)
        c.detail = f"{len(slow_sweep_comparison.rows)} ticks, worst margin {margin:+.3g} dB"
        assert margin >= -1e-9


def test_3_link_budget_against_friis(criterion):
    with criterion("3", "link budget at 5.8 GHz, 10 m") as c:
        link = LinkParams()
        loss = fspl_db(5.8e9, 10.0)
        prx = received_power_dbm(link, RadiationPattern().gain_dbi(0.0), 0.0, 10.0)
        ref = friis_fspl_db(5.8e9, 10.0)
        c.detail = f"fspl {loss:.4f} dB (oracle {ref:.4f}), boresight P_rx {prx:.4f} dBm"
        assert link.tx_power_dbm == 10.0
        assert abs(loss - 67.72) <= 0.01 and abs(loss - ref) <= 1e-9
        assert abs(prx - (-47.72)) <= 0.02 and abs(prx - (10.0 + 10.0 - ref)) <= 1e-9


def test_4_tracking_oracles(criterion):
    with criterion("4", "matching vs brute force, Kalman vs scalar closed form") as c:
        rng = np.random.default_rng(44)
        for _ in range(1000):
            n, m = rng.integers(1, 5, size=2)
            cost = rng.uniform(0, 10, size=(n, m))
            threshold = rng.uniform(2, 11)
            pairs = min_cost_matching(cost, threshold)
            k, total = brute_force_matching(cost, threshold)
            assert len(pairs) == k
            assert math.fsum(cost[i, j] for i, j in pairs) == total

        params = TrackerParams(measurement_noise=1.5)
        worst = 0.0
        for x, p, z in rng.uniform([-50, 0.1, -50], [50, 30, 50], size=(200, 3)):
            prior = TrackState(np.array([x, 3.0, 0.0, 0.0]), np.eye(4) * p, 1, hits=3, status=TrackStatus.CONFIRMED)
            post = kf_update(prior, Detection(z, 3.0, 10, 10, 1.0, 0), params)
            mean, var = scalar_kalman_update(x, p, z, 1.5**2)
            worst = max(worst, abs(post.mean[0] - mean), abs(post.covariance[0, 0] - var))
        c.detail = f"1000 instances exact, Kalman worst deviation {worst:.1e}"
        assert worst <= 1e-12


def test_5_vision_round_trip(criterion):
    with criterion("5", "pixel_to_direction(project(p)) on 1e4 in-view targets") as c:
        rng = np.random.default_rng(5)
        base = CameraModel()
        worst, n = 0.0, 0
        while n < 10_000:
            cam = base.mounted(Direction(rng.uniform(-math.pi, math.pi), rng.uniform(-1.2, 1.2)))
            ray = cam.basis().T @ np.array([1.0, rng.uniform(-0.6, 0.6), rng.uniform(-0.45, 0.45)])
            p = Position3.from_array(ray / np.linalg.norm(ray) * rng.uniform(0.5, 100.0))
            px = project(cam, p)
            if px is None:
                continue
            truth, _ = position_to_direction(p)
            worst = max(worst, angular_separation(pixel_to_direction(cam, *px), truth))
            n += 1
        c.detail = f"worst {worst:.1e} rad"
        assert worst < 1e-9


def _slew_ok(res) -> bool:
    cfg = res.config
    dt = 1.0 / cfg.control_rate_hz
    for a, b in zip(res.records, res.records[1:]):
        if abs(b.boresight_azimuth - a.boresight_azimuth) > cfg.servo_azimuth.max_speed * dt + 1e-12:
            return False
        if abs(b.boresight_elevation - a.boresight_elevation) > cfg.servo_elevation.max_speed * dt + 1e-12:
            return False
    return True


def test_6_step_response_and_slew(criterion):
    with criterion("6", "30 deg step settles within 1 s, slew limit respected") as c:
        dt = 0.02
        worst_after = {}
        for target_deg in (30.0, -30.0):
            ax = ServoAxis(ServoAxisParams())
            pid = PidState(PidParams())
            target = math.radians(target_deg)
            setpoint, errors = 0.0, []
            for _ in range(int(round(5.0 / dt))):
                rate = pid.step(target - ax.read(), dt)
                setpoint = ax.clamp(setpoint + rate * dt)
                ax.command_pulse(ax.angle_to_pulse(setpoint), dt)
                errors.append(abs(math.degrees(target - ax.current_angle)))
            # errors[k] is the error at t = (k + 1) * dt
            worst_after[target_deg] = max(errors[int(round(1.0 / dt)) - 1 :])

        scenarios = [
            ScenarioConfig(duration=10.0),
            ScenarioConfig(duration=5.0, seed=3, trajectory=ArcSweep(angular_rate=math.pi / 2)),
            noiseless(duration=3.0, trajectory=Waypoints((0.0,), (Position3(8.66, 5.0, 0.0),)),
                      initial_pointing=Direction()),
        ]
        slew = [_slew_ok(run_scenario(cfg)) for cfg in scenarios]
        c.detail = (
            f"max |error| after 1 s {max(worst_after.values()):.3f} deg, "
            f"slew held in {sum(slew)}/{len(slew)} scenarios"
        )
        assert all(v < 0.5 for v in worst_after.values())
        assert all(slew)


def test_7_lock_pipeline_under_dropout(criterion):
    with criterion("7", "dropout of max_age+1 frames: unlock on deletion, re-lock within n_init") as c:
        tp = TrackerParams()
        first, stop = 30, 30 + tp.max_age + 1
        cfg = noiseless(
            duration=4.0,
            trajectory=Waypoints((0.0,), (Position3(10.0, 2.0, 0.0),)),
            detector=DetectorParams(
                detection_prob=1.0, pixel_noise_sigma=0.0, false_alarm_rate=0.0, dropouts=((first, stop),)
            ),
        )
        res = run_scenario(cfg)
        mode_at = {r.frame_index: r.mode for r in res.records if r.frame_index >= 0}
        deleted = [s.frame for s in res.track_history if s.status is TrackStatus.DELETED and s.track_id == 1]
        confirmed_after = [
            s.frame for s in res.track_history if s.status is TrackStatus.CONFIRMED and s.frame >= stop
        ]
        assert len(deleted) == 1 and confirmed_after
        gone, back = deleted[0], confirmed_after[0]
        c.detail = f"track deleted at frame {gone}, detections resume at {stop}, re-lock at frame {back}"
        assert mode_at[gone - 1] == "tracking" and mode_at[gone] == "scanning"
        assert all(m == "tracking" for k, m in mode_at.items() if k < gone and k >= first)
        assert mode_at[back] == "tracking"
        assert back - stop < tp.n_init
        assert all(m == "scanning" for k, m in mode_at.items() if gone <= k < back)


def _compare_csv_digest(out: Path) -> str:
    cmd = [sys.executable, "-m", "rasim.cli", "compare", str(ROOT / "configs" / "sweep.toml"),
           "--seed", "11", "--out", str(out)]
    subprocess.run(cmd, check=True, capture_output=True)
    return hashlib.sha256((out / "compare.csv").read_bytes()).hexdigest()


def test_8_compare_is_deterministic(criterion, tmp_path):
    with criterion("8", "two ra-sim compare runs give identical CSV bytes") as c:
        a = _compare_csv_digest(tmp_path / "a")
        b = _compare_csv_digest(tmp_path / "b")
        c.detail = f"sha256 {a[:16]}... vs {b[:16]}..."
        assert a == b


def test_9_ber_against_monte_carlo(criterion):
    with criterion("9", "16-QAM BER vs Monte Carlo at 6/10/14 dB, monotone") as c:
        parts = []
        for ebn0 in (6.0, 10.0, 14.0):
            mc, symbols, errors = mc_ber_16qam(ebn0, seed=int(ebn0))
            rel = abs(ber_16qam(ebn0) - mc) / mc
            parts.append(f"{ebn0:g} dB {rel:.2%} ({symbols:.1e} symbols)")
            assert symbols >= 10_000_000
            assert rel <= 0.05
        grid = [ber_16qam(x) for x in np.linspace(-10.0, 30.0, 40001)]
        c.detail = ", ".join(parts)
        assert all(b <= a for a, b in zip(grid, grid[1:]))
        assert grid[-1] < grid[0]
