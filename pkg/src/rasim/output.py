"""Run artifacts: CSV tables, summary text, an SVG plot and the manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import astuple, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional, Sequence
from xml.sax.saxutils import escape

from . import __version__

MANIFEST_NAME = "manifest.json"


def fmt_value(x) -> str:
    """CSV cell text: floats with 9 significant digits, None as empty."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.9g}"
    if hasattr(x, "value"):  # enums
        return str(x.value)
    return str(x)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt_value(x) for x in row])
    return path


def write_dataclass_csv(path: Path, columns: Sequence[str], items: Iterable) -> Path:
    return write_csv(path, columns, (astuple(item) for item in items))


def write_summary(path: Path, title: str, items: dict) -> Path:
    lines = [title, ""]
    width = max((len(k) for k in items), default=0)
    for key, value in items.items():
        lines.append(f"{key.ljust(width)}  {fmt_value(value) if value is not None else 'n/a'}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


def _nice_step(span: float, target_ticks: int = 6) -> float:
    raw = span / max(target_ticks, 1)
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 5, 10):
        if m * mag >= raw:
            return m * mag
    return 10 * mag


@dataclass
class Series:
    label: str
    xs: Sequence[float]
    ys: Sequence[float]
    color: str
    dash: Optional[str] = None


@dataclass
class PlotSpec:
    title: str
    x_label: str
    y_label: str
    series: list[Series] = field(default_factory=list)
    width: int = 720
    height: int = 480


def render_svg(spec: PlotSpec) -> str:
    """A self-contained line plot, one polyline per series."""
    ml, mr, mt, mb = 80, 30, 50, 60
    pw, ph = spec.width - ml - mr, spec.height - mt - mb
    xs = [x for s in spec.series for x in s.xs]
    ys = [y for s in spec.series for y in s.ys if math.isfinite(y)]
    if not xs or not ys:
        raise ValueError("nothing to plot")
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    ystep = _nice_step(y1 - y0)
    y0, y1 = math.floor(y0 / ystep) * ystep, math.ceil(y1 / ystep) * ystep
    xstep = _nice_step(x1 - x0)

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return mt + (y1 - y) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.width}" height="{spec.height}" '
        f'viewBox="0 0 {spec.width} {spec.height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{spec.width}" height="{spec.height}" fill="white"/>',
        f'<text x="{spec.width / 2:.1f}" y="25" text-anchor="middle" font-size="15">{escape(spec.title)}</text>',
    ]
    tick = math.ceil(x0 / xstep) * xstep
    while tick <= x1 + 1e-9 * xstep:
        out.append(f'<line x1="{sx(tick):.2f}" y1="{mt}" x2="{sx(tick):.2f}" y2="{mt + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{sx(tick):.2f}" y="{mt + ph + 18}" text-anchor="middle">{tick:g}</text>')
        tick += xstep
    tick = y0
    while tick <= y1 + 1e-9 * ystep:
        out.append(f'<line x1="{ml}" y1="{sy(tick):.2f}" x2="{ml + pw}" y2="{sy(tick):.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{ml - 8}" y="{sy(tick) + 4:.2f}" text-anchor="end">{tick:g}</text>')
        tick += ystep
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(
        f'<text x="{ml + pw / 2:.1f}" y="{spec.height - 15}" text-anchor="middle">{escape(spec.x_label)}</text>'
    )
    out.append(
        f'<text x="20" y="{mt + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {mt + ph / 2:.1f})">{escape(spec.y_label)}</text>'
    )
    for n, s in enumerate(spec.series):
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(s.xs, s.ys) if math.isfinite(y))
        dash = f' stroke-dasharray="{s.dash}"' if s.dash else ""
        out.append(f'<polyline fill="none" stroke="{s.color}" stroke-width="1.5"{dash} points="{pts}"/>')
        ly = mt + 15 + 18 * n
        out.append(
            f'<line x1="{ml + pw - 150}" y1="{ly}" x2="{ml + pw - 120}" y2="{ly}" '
            f'stroke="{s.color}" stroke-width="1.5"{dash}/>'
        )
        out.append(f'<text x="{ml + pw - 112}" y="{ly + 4}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_power_plot(path: Path, rows) -> Path:
    """Received power against user azimuth for both antenna modes."""
    az = [math.degrees(r.user_azimuth) for r in rows]
    spec = PlotSpec(
        title="Received power vs user azimuth",
        x_label="User azimuth (deg)",
        y_label="Received power P_rx (dBm)",
        series=[
            Series("rotatable", az, [r.prx_ra_dbm for r in rows], "#1f77b4"),
            Series("fixed", az, [r.prx_fixed_dbm for r in rows], "#d62728", dash="6,4"),
        ],
    )
    Path(path).write_text(render_svg(spec), encoding="utf-8")
    return Path(path)


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifest(
    out_dir: Path,
    config_path,
    seed: Optional[int],
    started_at: str,
    command: str,
) -> Path:
    """Checksum every file under ``out_dir`` and write the manifest last.

    Only the top-level manifest is excluded from its own listing.
    """
    out_dir = Path(out_dir)
    target = out_dir / MANIFEST_NAME
    files = []
    for p in sorted(out_dir.rglob("*")):
        if p.is_file() and p != target:
            files.append({"path": p.relative_to(out_dir).as_posix(), "sha256": sha256_file(p), "bytes": p.stat().st_size})
    manifest = {
        "tool": "ra-sim",
        "version": __version__,
        "command": command,
        "config_path": str(config_path),
        "seed": seed,
        "output_dir": str(out_dir),
        "started_at": started_at,
        "files": files,
    }
    target.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return target
