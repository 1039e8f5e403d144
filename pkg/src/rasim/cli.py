"""``ra-sim`` command-line front end.

Exit codes: 0 success, 1 invalid config, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import ConfigError, apply_overrides, build_config, parse_override, read_raw, to_toml
from .engine import COMPARE_COLUMNS, RECORD_COLUMNS, compare_modes, run_batch, run_scenario
from .output import (
    utc_now,
    write_csv,
    write_dataclass_csv,
    write_manifest,
    write_power_plot,
    write_summary,
)

OUT_ENV = "RA_SIM_OUT"
DEFAULT_OUT = "ra-sim-out"

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2

DETECTION_COLUMNS = ("frame", "t", "center_u", "center_v", "box_w", "box_h", "confidence")
TRACK_COLUMNS = ("frame", "track_id", "status", "u", "v", "du", "dv", "gate_distance")


def _out_dir(arg: Optional[str]) -> Path:
    return Path(arg or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _overrides(args) -> list:
    ovs = [parse_override(s) for s in getattr(args, "set", None) or []]
    if getattr(args, "seed", None) is not None:
        ovs.append(("seed", args.seed))
    return ovs


def _load(args):
    raw = read_raw(args.config)
    return raw, build_config(apply_overrides(raw, _overrides(args)))


def _write_compare(out: Path, cmp, title: str) -> None:
    write_dataclass_csv(out / "compare.csv", COMPARE_COLUMNS, cmp.rows)
    write_summary(out / "summary.txt", title, cmp.summary)
    write_power_plot(out / "plot.svg", cmp.rows)


def cmd_run(args) -> int:
    started = utc_now()
    _, cfg = _load(args)
    out = _out_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_scenario(cfg)
    write_dataclass_csv(out / "records.csv", RECORD_COLUMNS, result.records)
    summary = {
        **result.summary,
        "frames_captured": result.frames_captured,
        "frames_processed": result.frames_processed,
        "pulse_clamps": result.pulse_clamps,
    }
    write_summary(out / "summary.txt", f"ra-sim run: {args.config} (seed {cfg.seed})", summary)
    (out / "config.toml").write_text(to_toml(cfg), encoding="utf-8")
    if args.dump_detections:
        write_dataclass_csv(out / "detections.csv", DETECTION_COLUMNS, result.detections)
    if args.dump_tracks:
        write_dataclass_csv(out / "tracks.csv", TRACK_COLUMNS, result.track_history)
    write_manifest(out, args.config, cfg.seed, started, "run")
    print((out / "summary.txt").read_text(encoding="utf-8"), end="")
    return EXIT_OK


def cmd_compare(args) -> int:
    started = utc_now()
    _, cfg = _load(args)
    out = _out_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cmp = compare_modes(cfg)
    _write_compare(out, cmp, f"ra-sim compare: {args.config} (seed {cfg.seed})")
    (out / "config.toml").write_text(to_toml(cfg), encoding="utf-8")
    write_manifest(out, args.config, cfg.seed, started, "compare")
    print((out / "summary.txt").read_text(encoding="utf-8"), end="")
    return EXIT_OK


def cmd_validate(args) -> int:
    _, cfg = _load(args)
    print(to_toml(cfg), end="")
    return EXIT_OK


def parse_grid(text: str) -> tuple[str, list]:
    """``key=start:stop:steps`` -> (key, evenly spaced values, endpoints included)."""
    try:
        key, rng = text.split("=", 1)
        start, stop, steps = rng.split(":")
        start, stop, n = float(start), float(stop), int(steps)
    except ValueError:
        raise ConfigError([f"--grid {text!r}: expected key=start:stop:steps"]) from None
    if n < 1:
        raise ConfigError([f"--grid {text!r}: steps must be >= 1"])
    values = np.linspace(start, stop, n) if n > 1 else np.array([start])
    # integral values stay ints so integer fields such as seed accept them
    return key.strip(), [int(v) if float(v).is_integer() else float(v) for v in values]


def cmd_sweep(args) -> int:
    started = utc_now()
    raw = read_raw(args.config)
    base = apply_overrides(raw, _overrides(args))
    grids = [parse_grid(g) for g in args.grid]
    points = [[]]
    for key, values in grids:
        points = [p + [(key, v)] for p in points for v in values]

    configs, errors = [], []
    for n, point in enumerate(points):
        try:
            configs.append(build_config(apply_overrides(base, point)))
        except ConfigError as exc:
            label = ", ".join(f"{k}={v}" for k, v in point)
            errors.extend(f"point {n} ({label}): {e}" for e in exc.errors)
    if errors:
        raise ConfigError(errors)

    out = _out_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = run_batch(configs, compare_modes, jobs=args.jobs)
    keys = [k for k, _ in grids]
    summary_keys = list(results[0].summary)
    index_rows = []
    for n, (point, cfg, cmp) in enumerate(zip(points, configs, results)):
        sub = out / f"point_{n:03d}"
        sub.mkdir(exist_ok=True)
        label = ", ".join(f"{k}={v}" for k, v in point)
        _write_compare(sub, cmp, f"ra-sim sweep point {n}: {label}")
        (sub / "config.toml").write_text(to_toml(cfg), encoding="utf-8")
        index_rows.append([n, sub.name, *[v for _, v in point], *[cmp.summary[k] for k in summary_keys]])
    write_csv(out / "index.csv", ["point", "dir", *keys, *summary_keys], index_rows)
    write_manifest(out, args.config, configs[0].seed, started, "sweep")
    print(f"{len(points)} points written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ra-sim", description="Rotatable-antenna link simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("config", help="scenario TOML file")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
        if out:
            p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")

    p = sub.add_parser("run", help="simulate one scenario and write records.csv")
    common(p)
    p.add_argument("--dump-detections", action="store_true", help="also write detections.csv")
    p.add_argument("--dump-tracks", action="store_true", help="also write tracks.csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="rotatable vs fixed antenna on the same trajectory")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", help="check a config and print the effective values")
    common(p, out=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="compare over a parameter grid")
    common(p)
    p.add_argument("--grid", action="append", required=True, metavar="KEY=START:STOP:STEPS")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("invalid config:", file=sys.stderr)
        for e in exc.errors:
            print(f"  {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
