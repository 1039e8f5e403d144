import csv
import hashlib
import json
import math
import shutil
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest
import tomlkit

from rasim.cli import main
from rasim.config import load_config, to_dict
from rasim.engine import run_scenario
from rasim.scenario import ScenarioConfig

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = Path(__file__).parent / "golden"
SWEEP = ROOT / "configs" / "sweep.toml"


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def sha(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_validate_minimal_config_echoes_defaults(tmp_path, capsys):
    assert main(["validate", write(tmp_path, "")]) == 0
    echoed = tomlkit.parse(capsys.readouterr().out).unwrap()
    assert echoed == to_dict(ScenarioConfig())


def test_validate_rejects_wide_camera(tmp_path, capsys):
    assert main(["validate", write(tmp_path, "[camera]\nhfov = 200\n")]) == 1
    err = capsys.readouterr().err
    assert "camera.hfov" in err and "180" in err


def test_validate_names_both_pulse_fields(tmp_path, capsys):
    cfg = write(tmp_path, "[servo.elevation]\npulse_min_us = 2000\npulse_max_us = 2000\n")
    assert main(["validate", cfg]) == 1
    err = capsys.readouterr().err
    assert "servo.elevation.pulse_min_us" in err and "servo.elevation.pulse_max_us" in err


def test_validate_reports_all_problems_at_once(tmp_path, capsys):
    cfg = write(tmp_path, "duration = -1\n[camera]\nhfov = 200\n[link]\ncarrier_hz = 0\n")
    assert main(["validate", cfg]) == 1
    err = capsys.readouterr().err
    for key in ("duration", "camera.hfov", "link.carrier_hz"):
        assert key in err


def test_run_writes_expected_rows(tmp_path):
    out = tmp_path / "out"
    assert main(["run", write(tmp_path, "duration = 2.0\n"), "--out", str(out)]) == 0
    table = rows(out / "records.csv")
    assert len(table) - 1 == ScenarioConfig(duration=2.0).tick_count
    assert {p.name for p in out.iterdir()} == {"records.csv", "summary.txt", "config.toml", "manifest.json"}


def test_run_rejects_negative_duration(tmp_path, capsys):
    assert main(["run", write(tmp_path, "duration = -1\n"), "--out", str(tmp_path / "o")]) == 1
    assert "duration" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_run_seed_override_is_deterministic(tmp_path):
    cfg = write(tmp_path, "duration = 3.0\n")
    for name in ("a", "b", "c"):
        seed = "8" if name == "c" else "7"
        assert main(["run", cfg, "--seed", seed, "--out", str(tmp_path / name)]) == 0
    assert sha(tmp_path / "a" / "records.csv") == sha(tmp_path / "b" / "records.csv")
    assert sha(tmp_path / "a" / "records.csv") != sha(tmp_path / "c" / "records.csv")
    assert json.loads((tmp_path / "a" / "manifest.json").read_text())["seed"] == 7


def test_io_errors_exit_2(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.toml")]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", write(tmp_path, "duration = 1.0\n"), "--out", str(blocker / "sub")]) == 2
    assert "I/O error" in capsys.readouterr().err


def test_syntax_error_is_a_validation_error(tmp_path):
    assert main(["validate", write(tmp_path, "duration = = 3\n")]) == 1


def test_csv_headers_match_golden_files(tmp_path):
    cfg = write(tmp_path, "duration = 1.0\n")
    main(["run", cfg, "--out", str(tmp_path / "r")])
    main(["compare", cfg, "--out", str(tmp_path / "c")])
    golden_records = (GOLDEN / "records_header.csv").read_text().strip().split(",")
    golden_compare = (GOLDEN / "compare_header.csv").read_text().strip().split(",")
    assert rows(tmp_path / "r" / "records.csv")[0] == golden_records
    assert rows(tmp_path / "c" / "compare.csv")[0] == golden_compare


def test_csv_floats_round_trip_to_nine_digits(tmp_path):
    cfg_path = write(tmp_path, "duration = 1.0\nseed = 2\n")
    main(["run", cfg_path, "--out", str(tmp_path / "r")])
    table = rows(tmp_path / "r" / "records.csv")
    header, body = table[0], table[1:]
    records = run_scenario(load_config(cfg_path))
    for rec, row in zip(records.records, body):
        for name in ("prx_dbm", "pointing_error", "sensor_azimuth", "snr_db"):
            value = getattr(rec, name)
            text = row[header.index(name)]
            assert text == f"{value:.9g}"
            assert float(text) == pytest.approx(value, rel=1e-8, abs=1e-300)


def test_dump_flags(tmp_path):
    out = tmp_path / "o"
    cfg = write(tmp_path, "duration = 1.0\n")
    assert main(["run", cfg, "--out", str(out), "--dump-detections", "--dump-tracks"]) == 0
    dets = rows(out / "detections.csv")
    tracks = rows(out / "tracks.csv")
    assert dets[0] == ["frame", "t", "center_u", "center_v", "box_w", "box_h", "confidence"]
    assert tracks[0] == ["frame", "track_id", "status", "u", "v", "du", "dv", "gate_distance"]
    assert len(dets) > 20 and len(tracks) > 20
    assert {r[2] for r in tracks[1:]} <= {"tentative", "confirmed", "deleted"}


def check_manifest(out):
    manifest = json.loads((out / "manifest.json").read_text())
    listed = {f["path"]: f["sha256"] for f in manifest["files"]}
    present = {p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file()} - {"manifest.json"}
    assert set(listed) == present
    for name, digest in listed.items():
        assert sha(out / name) == digest
    for key in ("config_path", "seed", "version", "output_dir", "started_at"):
        assert key in manifest
    return manifest


def test_manifest_is_complete(tmp_path):
    out = tmp_path / "o"
    cfg = write(tmp_path, "duration = 1.0\n")
    main(["run", cfg, "--out", str(out), "--dump-detections", "--dump-tracks"])
    check_manifest(out)
    # rerunning into the same directory still leaves a complete manifest
    main(["compare", cfg, "--out", str(out)])
    assert check_manifest(out)["command"] == "compare"


def test_compare_default_sweep(tmp_path, capsys):
    out = tmp_path / "sweep"
    assert main(["compare", str(SWEEP), "--out", str(out)]) == 0
    assert "power_gain_db" in capsys.readouterr().out
    table = rows(out / "compare.csv")
    header, body = table[0], table[1:]
    az = [float(r[header.index("user_azimuth")]) for r in body]
    fixed = [float(r[header.index("prx_fixed_dbm")]) for r in body]
    assert all(b >= a for a, b in zip(az, az[1:]))
    assert az[0] == pytest.approx(-math.pi / 2, abs=1e-8)
    assert az[-1] == pytest.approx(math.pi / 2, abs=1e-8)
    closest = min(range(len(az)), key=lambda i: abs(az[i]))
    assert fixed[closest] == max(fixed)
    check_manifest(out)


def test_plot_has_two_curves_and_labels(tmp_path):
    out = tmp_path / "o"
    main(["compare", write(tmp_path, "duration = 2.0\n"), "--out", str(out)])
    svg = ET.parse(out / "plot.svg").getroot()
    ns = {"s": "http://www.w3.org/2000/svg"}
    lines = svg.findall("s:polyline", ns)
    assert len(lines) == 2
    assert all(len(pl.get("points").split()) == 101 for pl in lines)
    texts = " ".join(t.text or "" for t in svg.iter("{http://www.w3.org/2000/svg}text"))
    assert "azimuth (deg)" in texts and "dBm" in texts


def test_compare_twice_is_byte_identical(tmp_path):
    cfg = write(tmp_path, "duration = 3.0\nseed = 5\n")
    main(["compare", cfg, "--out", str(tmp_path / "a")])
    main(["compare", cfg, "--out", str(tmp_path / "b")])
    assert sha(tmp_path / "a" / "compare.csv") == sha(tmp_path / "b" / "compare.csv")


def test_output_directory_from_environment(tmp_path, monkeypatch):
    target = tmp_path / "from-env"
    monkeypatch.setenv("RA_SIM_OUT", str(target))
    assert main(["run", write(tmp_path, "duration = 0.5\n")]) == 0
    assert (target / "records.csv").exists()


def test_sweep_writes_points_and_index(tmp_path):
    out = tmp_path / "sw"
    cfg = write(tmp_path, "duration = 2.0\n")
    argv = ["sweep", cfg, "--grid", "pattern.hpbw=30:90:3", "--grid", "seed=0:1:2", "--jobs", "2", "--out", str(out)]
    assert main(argv) == 0
    index = rows(out / "index.csv")
    assert index[0][:4] == ["point", "dir", "pattern.hpbw", "seed"]
    assert len(index) == 1 + 6
    for row in index[1:]:
        assert (out / row[1] / "compare.csv").exists()
    hpbw = load_config(out / "point_002" / "config.toml").pattern.hpbw
    assert hpbw == pytest.approx(math.radians(60))
    check_manifest(out)


def test_sweep_validates_every_point(tmp_path, capsys):
    cfg = write(tmp_path, "duration = 1.0\n")
    assert main(["sweep", cfg, "--grid", "camera.hfov=100:200:3", "--out", str(tmp_path / "s")]) == 1
    assert "camera.hfov" in capsys.readouterr().err
    assert main(["sweep", cfg, "--grid", "camera.hfov=1:2"]) == 1


@pytest.mark.skipif(shutil.which("ra-sim") is None, reason="console script not installed")
def test_console_script(tmp_path):
    done = subprocess.run(["ra-sim", "validate", str(SWEEP)], capture_output=True, text=True)
    assert done.returncode == 0
    assert "[trajectory]" in done.stdout
    done = subprocess.run([sys.executable, "-m", "rasim.cli", "--version"], capture_output=True, text=True)
    assert done.returncode == 0 and "ra-sim" in done.stdout
