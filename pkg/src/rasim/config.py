"""Scenario config files.

Configs are TOML. Every key is optional and falls back to the default
scenario. Angles are written in degrees and angular rates in deg/s. They
are converted to radians on load. Validation is aggregated: all problems are
reported together, each prefixed with its dotted key path.
"""

from __future__ import annotations

import copy
import math
from dataclasses import replace
from pathlib import Path
from typing import Any, Iterable, Optional

import tomlkit

from .errors import InvalidParameters
from .geometry import Direction, Position3
from .scenario import AntennaMode, ArcSweep, LinearWalk, ScenarioConfig, Waypoints

DEG = "deg"
NUM = "num"
INT = "int"

# config section -> (ScenarioConfig attribute, {key: unit})
SECTIONS: dict[str, tuple[str, dict[str, str]]] = {
    "camera": (
        "camera",
        {
            "width_px": INT,
            "height_px": INT,
            "hfov": DEG,
            "frame_rate_hz": NUM,
            "user_height_m": NUM,
            "user_width_m": NUM,
        },
    ),
    "detector": (
        "detector",
        {"detection_prob": NUM, "pixel_noise_sigma": NUM, "false_alarm_rate": NUM, "dropouts": "ranges"},
    ),
    "tracker": (
        "tracker",
        {
            "process_noise_accel": NUM,
            "measurement_noise": NUM,
            "gate_threshold": NUM,
            "n_init": INT,
            "max_age": INT,
            "init_velocity_std": NUM,
        },
    ),
    "pattern": ("pattern", {"peak_gain_dbi": NUM, "hpbw": DEG, "floor_attenuation_db": NUM}),
    "link": (
        "link",
        {
            "carrier_hz": NUM,
            "tx_power_dbm": NUM,
            "bit_rate_bps": NUM,
            "bits_per_symbol": INT,
            "noise_figure_db": NUM,
            "rx_bandwidth_hz": NUM,
        },
    ),
}
_SERVO_KEYS = {
    "pulse_min_us": NUM,
    "pulse_max_us": NUM,
    "angle_min": DEG,
    "angle_max": DEG,
    "max_speed": DEG,
    "sensor_noise_sigma": DEG,
}
_PID_KEYS = {"kp": NUM, "ki": NUM, "kd": NUM, "output_limit": DEG, "integral_limit": DEG}
for _axis in ("azimuth", "elevation"):
    SECTIONS[f"servo.{_axis}"] = (f"servo_{_axis}", _SERVO_KEYS)
    SECTIONS[f"pid.{_axis}"] = (f"pid_{_axis}", _PID_KEYS)

TOP_LEVEL = {"duration": NUM, "control_rate_hz": NUM, "seed": INT, "scan_period": NUM}
ANTENNA_KEYS = {
    "mode": "str",
    "fixed_azimuth": DEG,
    "fixed_elevation": DEG,
    "initial_azimuth": DEG,
    "initial_elevation": DEG,
}
TRAJECTORY_KEYS = {
    "arc_sweep": {"radius": NUM, "elevation": DEG, "az_start": DEG, "az_end": DEG, "angular_rate": DEG},
    "linear_walk": {"start": "vec", "end": "vec", "speed": NUM},
    "waypoints": {"times": "list", "positions": "veclist"},
}


# scenario-level field names -> config key paths
_SCENARIO_KEYS = {
    "fixed_direction.azimuth": "antenna.fixed_azimuth",
    "fixed_direction.elevation": "antenna.fixed_elevation",
    "initial_pointing.azimuth": "antenna.initial_azimuth",
    "initial_pointing.elevation": "antenna.initial_elevation",
}


class ConfigError(Exception):
    """Aggregated config problems; ``errors`` holds one message per problem."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _convert(path: str, value: Any, unit: str, errors: list[str]):
    if unit == INT:
        if isinstance(value, bool) or not isinstance(value, int):
            errors.append(f"{path}: expected an integer, got {value!r}")
            return None
        return value
    if unit in (NUM, DEG):
        if not _is_number(value):
            errors.append(f"{path}: expected a number, got {value!r}")
            return None
        v = float(value)
        if not math.isfinite(v):
            errors.append(f"{path}: must be finite, got {value!r}")
            return None
        return math.radians(v) if unit == DEG else v
    if unit == "str":
        if not isinstance(value, str):
            errors.append(f"{path}: expected a string, got {value!r}")
            return None
        return value
    if unit == "vec":
        if not (isinstance(value, list) and len(value) == 3 and all(_is_number(x) for x in value)):
            errors.append(f"{path}: expected [x, y, z] in meters, got {value!r}")
            return None
        return Position3(*value)
    if unit == "list":
        if not (isinstance(value, list) and all(_is_number(x) for x in value)):
            errors.append(f"{path}: expected a list of numbers, got {value!r}")
            return None
        return tuple(float(x) for x in value)
    if unit == "ranges":
        ok = isinstance(value, list) and all(
            isinstance(r, list) and len(r) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in r)
            for r in value
        )
        if not ok:
            errors.append(f"{path}: expected a list of [start, stop] frame pairs, got {value!r}")
            return None
        return tuple((r[0], r[1]) for r in value)
    if unit == "veclist":
        out = []
        for n, item in enumerate(value if isinstance(value, list) else [None]):
            p = _convert(f"{path}[{n}]", item, "vec", errors)
            if p is None:
                return None
            out.append(p)
        return tuple(out)
    raise AssertionError(unit)


def _build(cls_or_default, path: str, values: dict, errors: list[str]):
    """Instantiate with ``values`` replacing defaults; collect invariant problems."""
    try:
        if isinstance(cls_or_default, type):
            return cls_or_default(**values)
        return replace(cls_or_default, **values)
    except InvalidParameters as exc:
        for names, msg in exc.problems:
            keys = [f"{path}.{n}" if path else _SCENARIO_KEYS.get(n, n) for n in names]
            errors.append(f"{', '.join(keys)}: {msg}")
    except (TypeError, ValueError) as exc:
        errors.append(f"{path}: {exc}")
    return None


def _section_values(raw: dict, path: str, keys: dict[str, str], errors: list[str]) -> dict:
    out = {}
    for key, value in raw.items():
        full = f"{path}.{key}" if path else key
        if key not in keys:
            errors.append(f"{full}: unknown key")
            continue
        v = _convert(full, value, keys[key], errors)
        if v is not None:
            out[key] = v
    return out


def _get_table(raw: dict, dotted: str, errors: list[str]) -> dict:
    node: Any = raw
    for part in dotted.split("."):
        if not isinstance(node, dict):
            return {}
        node = node.get(part, {})
    if not isinstance(node, dict):
        errors.append(f"{dotted}: expected a table")
        return {}
    return node


def build_config(raw: dict) -> ScenarioConfig:
    """Validate a plain config mapping and return the scenario.

    Raises ``ConfigError`` listing every problem found.
    """
    errors: list[str] = []
    default = ScenarioConfig()
    kwargs: dict[str, Any] = {}

    known_tables = {"camera", "detector", "tracker", "pattern", "link", "servo", "pid", "antenna", "trajectory"}
    for key, value in raw.items():
        if key in TOP_LEVEL:
            v = _convert(key, value, TOP_LEVEL[key], errors)
            if v is not None:
                kwargs[key] = v
        elif key in known_tables:
            if not isinstance(value, dict):
                errors.append(f"{key}: expected a table")
        else:
            errors.append(f"{key}: unknown key")
    for group in ("servo", "pid"):
        for axis in _get_table(raw, group, errors):
            if axis not in ("azimuth", "elevation"):
                errors.append(f"{group}.{axis}: unknown key")

    for section, (attr, keys) in SECTIONS.items():
        values = _section_values(_get_table(raw, section, errors), section, keys, errors)
        built = _build(getattr(default, attr), section, values, errors)
        if built is not None:
            kwargs[attr] = built

    antenna = _section_values(_get_table(raw, "antenna", errors), "antenna", ANTENNA_KEYS, errors)
    if "mode" in antenna:
        try:
            kwargs["antenna_mode"] = AntennaMode(antenna["mode"])
        except ValueError:
            errors.append(f"antenna.mode: must be one of {[m.value for m in AntennaMode]}, got {antenna['mode']!r}")
    fixed = _direction("antenna.fixed", antenna.get("fixed_azimuth", 0.0), antenna.get("fixed_elevation", 0.0), errors)
    if fixed is not None:
        kwargs["fixed_direction"] = fixed
    if "initial_azimuth" in antenna or "initial_elevation" in antenna:
        init = _direction(
            "antenna.initial", antenna.get("initial_azimuth", 0.0), antenna.get("initial_elevation", 0.0), errors
        )
        if init is not None:
            kwargs["initial_pointing"] = init

    traj = _trajectory(_get_table(raw, "trajectory", errors), errors)
    if traj is not None:
        kwargs["trajectory"] = traj

    cfg = _build(ScenarioConfig, "", kwargs, errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def _direction(path: str, az: float, el: float, errors: list[str]) -> Optional[Direction]:
    try:
        return Direction(az, el)
    except ValueError as exc:
        errors.append(f"{path}_elevation: {exc}")
        return None


def _trajectory(raw: dict, errors: list[str]):
    if not raw:
        return None
    raw = dict(raw)
    kind = raw.pop("type", "arc_sweep")
    classes = {"arc_sweep": ArcSweep, "linear_walk": LinearWalk, "waypoints": Waypoints}
    if kind not in classes:
        errors.append(f"trajectory.type: must be one of {sorted(classes)}, got {kind!r}")
        return None
    values = _section_values(raw, "trajectory", TRAJECTORY_KEYS[kind], errors)
    return _build(classes[kind], "trajectory", values, errors)


def parse_override(text: str) -> tuple[str, Any]:
    """Parse ``key.path=value``; the value uses TOML syntax, bare words are strings."""
    if "=" not in text:
        raise ConfigError([f"override {text!r}: expected key=value"])
    key, value = text.split("=", 1)
    key = key.strip()
    try:
        parsed = tomlkit.parse(f"v = {value.strip()}")["v"]
        return key, parsed.unwrap() if hasattr(parsed, "unwrap") else parsed
    except Exception:
        return key, value.strip()


def apply_overrides(raw: dict, overrides: Iterable[tuple[str, Any]]) -> dict:
    out = copy.deepcopy(raw)
    for key, value in overrides:
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError([f"{key}: cannot override inside a non-table value"])
        node[parts[-1]] = value
    return out


def read_raw(path) -> dict:
    """Parse a config file into plain Python data.

    ``OSError`` propagates for unreadable files; TOML syntax errors become
    ``ConfigError``.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        return tomlkit.parse(text).unwrap()
    except tomlkit.exceptions.ParseError as exc:
        raise ConfigError([f"{path}: TOML syntax error: {exc}"]) from exc


def load_config(path, overrides: Iterable[tuple[str, Any]] = ()) -> ScenarioConfig:
    return build_config(apply_overrides(read_raw(path), overrides))


def _deg(x: float) -> float:
    # prefer a short form (60.0 over 59.99999999999999) when it converts back exactly
    d = math.degrees(x)
    for digits in (12, 15, 16):
        short = float(f"{d:.{digits}g}")
        if math.radians(short) == x:
            return short
    return d


def to_dict(cfg: ScenarioConfig) -> dict:
    """Config-file representation (degrees) of a scenario, defaults filled in."""
    out: dict[str, Any] = {
        "duration": cfg.duration,
        "control_rate_hz": cfg.control_rate_hz,
        "seed": cfg.seed,
        "scan_period": cfg.scan_period,
    }
    for section, (attr, keys) in SECTIONS.items():
        obj = getattr(cfg, attr)
        table = {}
        for key, unit in keys.items():
            v = getattr(obj, key)
            if v is None:
                continue
            if unit == DEG:
                v = _deg(v)
            elif unit == "ranges":
                v = [list(r) for r in v]
            table[key] = v
        node = out
        parts = section.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = table
    antenna = {
        "mode": cfg.antenna_mode.value,
        "fixed_azimuth": _deg(cfg.fixed_direction.azimuth),
        "fixed_elevation": _deg(cfg.fixed_direction.elevation),
    }
    if cfg.initial_pointing is not None:
        antenna["initial_azimuth"] = _deg(cfg.initial_pointing.azimuth)
        antenna["initial_elevation"] = _deg(cfg.initial_pointing.elevation)
    out["antenna"] = antenna
    tr = cfg.trajectory
    if isinstance(tr, ArcSweep):
        out["trajectory"] = {
            "type": tr.kind,
            "radius": tr.radius,
            "elevation": _deg(tr.elevation),
            "az_start": _deg(tr.az_start),
            "az_end": _deg(tr.az_end),
            "angular_rate": _deg(tr.angular_rate),
        }
    elif isinstance(tr, LinearWalk):
        out["trajectory"] = {
            "type": tr.kind,
            "start": [tr.start.x, tr.start.y, tr.start.z],
            "end": [tr.end.x, tr.end.y, tr.end.z],
            "speed": tr.speed,
        }
    else:
        out["trajectory"] = {
            "type": tr.kind,
            "times": list(tr.times),
            "positions": [[p.x, p.y, p.z] for p in tr.positions],
        }
    return out


def to_toml(cfg: ScenarioConfig) -> str:
    return tomlkit.dumps(to_dict(cfg))
