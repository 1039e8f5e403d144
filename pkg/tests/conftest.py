import math

import pytest

from rasim.control import ServoAxisParams
from rasim.scenario import ArcSweep, ScenarioConfig
from rasim.vision import DetectorParams

CLEAN_DETECTOR = DetectorParams(detection_prob=1.0, pixel_noise_sigma=0.0, false_alarm_rate=0.0)


def noiseless(**overrides) -> ScenarioConfig:
    """Perfect detection and exact servo sensors; everything else default."""
    kw = dict(
        detector=CLEAN_DETECTOR,
        servo_azimuth=ServoAxisParams(),
        servo_elevation=ServoAxisParams(angle_min=-math.pi / 4, angle_max=math.pi / 4),
    )
    kw.update(overrides)
    return ScenarioConfig(**kw)


def slow_sweep(**overrides) -> ScenarioConfig:
    """Noiseless -90..+90 deg arc at 3 deg/s, long enough to finish."""
    rate = math.pi / 60
    return noiseless(duration=math.pi / rate, trajectory=ArcSweep(angular_rate=rate), **overrides)


@pytest.fixture(scope="session")
def slow_sweep_comparison():
    from rasim.engine import compare_modes

    return compare_modes(slow_sweep())


_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


class _Criterion:
    def __init__(self, key: str, title: str):
        self.key, self.title, self.detail = key, title, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        _ACCEPTANCE[self.key] = (ok, f"{self.title}{': ' + self.detail if self.detail else ''}")
        print(f"{'PASS' if ok else 'FAIL'} [{self.key}] {_ACCEPTANCE[self.key][1]}")
        return False


@pytest.fixture
def criterion():
    """``with criterion("3", "title") as c: ...`` records PASS or FAIL for the summary."""
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: int(k)):
        ok, text = _ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} [{key}] {text}")
