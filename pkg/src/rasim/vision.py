"""Pinhole camera model and a synthetic stand-in for the neural detector.

Image coordinates: ``u`` grows with camera-relative azimuth (to the left of the
optical axis seen from above, which is the positive azimuth direction) and
``v`` grows downward, so a target above the optical axis has ``v < cy``.
Square pixels, no lens distortion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import raise_if
from .geometry import Direction, Position3, position_to_direction

# Slack on the image-rectangle test so FOV-edge targets survive rounding.
_EDGE_TOL_PX = 1e-6


@dataclass(frozen=True)
class CameraModel:
    width_px: int = 640
    height_px: int = 480
    hfov: float = math.radians(60.0)
    mount_direction: Direction = field(default_factory=Direction)
    frame_rate_hz: float = 30.0
    user_height_m: float = 1.7
    user_width_m: float = 0.5

    def __post_init__(self):
        raise_if(self.problems())

    def problems(self):
        out = []
        if not (0.0 < self.hfov < math.pi):
            out.append((("hfov",), f"must lie in (0, 180) deg, got {math.degrees(self.hfov):.6g} deg"))
        if not self.width_px >= 1:
            out.append((("width_px",), f"must be >= 1, got {self.width_px!r}"))
        if not self.height_px >= 1:
            out.append((("height_px",), f"must be >= 1, got {self.height_px!r}"))
        if not self.frame_rate_hz > 0:
            out.append((("frame_rate_hz",), f"must be > 0, got {self.frame_rate_hz!r}"))
        if not self.user_height_m > 0:
            out.append((("user_height_m",), f"must be > 0, got {self.user_height_m!r}"))
        if not self.user_width_m > 0:
            out.append((("user_width_m",), f"must be > 0, got {self.user_width_m!r}"))
        return out

    @property
    def focal_px(self) -> float:
        return (self.width_px / 2.0) / math.tan(self.hfov / 2.0)

    @property
    def cx(self) -> float:
        return self.width_px / 2.0

    @property
    def cy(self) -> float:
        return self.height_px / 2.0

    @property
    def vfov(self) -> float:
        return 2.0 * math.atan((self.height_px / 2.0) / self.focal_px)

    def mounted(self, direction: Direction) -> "CameraModel":
        return replace(self, mount_direction=direction)

    def basis(self) -> np.ndarray:
        """Rows are the camera forward, left and up axes in world coordinates."""
        a = self.mount_direction.azimuth
        e = self.mount_direction.elevation
        ca, sa, ce, se = math.cos(a), math.sin(a), math.cos(e), math.sin(e)
        return np.array(
            [
                [ce * ca, ce * sa, se],
                [-sa, ca, 0.0],
                [-se * ca, -se * sa, ce],
            ]
        )

    def in_bounds(self, u: float, v: float) -> bool:
        return (
            -_EDGE_TOL_PX <= u <= self.width_px + _EDGE_TOL_PX
            and -_EDGE_TOL_PX <= v <= self.height_px + _EDGE_TOL_PX
        )


def to_camera_frame(cam: CameraModel, p: Position3) -> np.ndarray:
    return cam.basis() @ p.as_array()


def _project_camera_vector(cam: CameraModel, vec_cam) -> Optional[tuple[float, float]]:
    fwd, left, up = vec_cam
    if fwd <= 0.0:
        return None
    f = cam.focal_px
    # u = cx + f tan(az_rel); v = cy - f tan(el_rel) / cos(az_rel)
    return cam.cx + f * left / fwd, cam.cy - f * up / fwd


def project(cam: CameraModel, p: Position3) -> Optional[tuple[float, float]]:
    """Pixel of world point ``p``, or ``None`` when it is out of view."""
    vec = to_camera_frame(cam, p)
    if not vec.any():
        raise ValueError("target coincides with the camera centre")
    px = _project_camera_vector(cam, vec)
    if px is None or not cam.in_bounds(*px):
        return None
    return px


def pixel_ray(cam: CameraModel, u: float, v: float) -> np.ndarray:
    """World-frame ray through pixel ``(u, v)``; not limited to the image."""
    f = cam.focal_px
    return cam.basis().T @ np.array([1.0, (u - cam.cx) / f, (cam.cy - v) / f])


def pixel_to_direction(cam: CameraModel, u: float, v: float) -> Direction:
    if not cam.in_bounds(u, v):
        raise ValueError(f"pixel ({u}, {v}) outside the {cam.width_px}x{cam.height_px} image")
    d, _ = position_to_direction(Position3.from_array(pixel_ray(cam, u, v)))
    return d


def reproject(src: CameraModel, dst: CameraModel, u: float, v: float) -> Optional[tuple[float, float]]:
    """Where pixel ``(u, v)`` of ``src`` lands in ``dst`` (same optical centre)."""
    return _project_camera_vector(dst, dst.basis() @ pixel_ray(src, u, v))


@dataclass(frozen=True)
class Detection:
    center_u: float
    center_v: float
    box_w: float
    box_h: float
    confidence: float
    frame_index: int


@dataclass(frozen=True)
class DetectorParams:
    detection_prob: float = 0.95
    pixel_noise_sigma: float = 2.0
    false_alarm_rate: float = 0.02
    rng_seed: int = 0
    # half-open frame ranges [start, stop) with no output at all (occlusion)
    dropouts: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        raise_if(self.problems())

    def problems(self):
        out = []
        if not (0.0 <= self.detection_prob <= 1.0):
            out.append((("detection_prob",), f"must lie in [0, 1], got {self.detection_prob!r}"))
        if not self.pixel_noise_sigma >= 0:
            out.append((("pixel_noise_sigma",), f"must be >= 0, got {self.pixel_noise_sigma!r}"))
        if not self.false_alarm_rate >= 0:
            out.append((("false_alarm_rate",), f"must be >= 0, got {self.false_alarm_rate!r}"))
        if not (isinstance(self.rng_seed, int) and self.rng_seed >= 0):
            out.append((("rng_seed",), f"must be an integer >= 0, got {self.rng_seed!r}"))
        for start, stop in self.dropouts:
            if not 0 <= start < stop:
                out.append((("dropouts",), f"each range needs 0 <= start < stop, got [{start}, {stop}]"))
        return out

    def dropped(self, frame_index: int) -> bool:
        return any(start <= frame_index < stop for start, stop in self.dropouts)


DETECTOR_STREAM = 0x5EE


def synth_detect(
    cam: CameraModel,
    params: DetectorParams,
    truth: Sequence[Position3],
    frame_index: int,
) -> list[Detection]:
    """Noisy detections for one frame.

    The random draws depend only on ``(params.rng_seed, frame_index)`` so a
    frame can be regenerated in isolation.
    """
    if params.dropped(frame_index):
        return []
    rng = np.random.default_rng([params.rng_seed, DETECTOR_STREAM, frame_index])
    f = cam.focal_px
    out = []
    for p in truth:
        px = project(cam, p)
        # draws happen for every target so later targets keep their streams
        hit = rng.random() < params.detection_prob
        noise = rng.normal(0.0, 1.0, size=2) * params.pixel_noise_sigma
        conf = rng.uniform(0.6, 1.0)
        if px is None or not hit:
            continue
        depth = to_camera_frame(cam, p)[0]
        u = min(max(px[0] + noise[0], 0.0), float(cam.width_px))
        v = min(max(px[1] + noise[1], 0.0), float(cam.height_px))
        out.append(
            Detection(
                center_u=u,
                center_v=v,
                box_w=f * cam.user_width_m / depth,
                box_h=f * cam.user_height_m / depth,
                confidence=float(conf),
                frame_index=frame_index,
            )
        )
    n_false = rng.poisson(params.false_alarm_rate) if params.false_alarm_rate > 0 else 0
    for _ in range(n_false):
        out.append(
            Detection(
                center_u=float(rng.uniform(0.0, cam.width_px)),
                center_v=float(rng.uniform(0.0, cam.height_px)),
                box_w=float(rng.uniform(10.0, 120.0)),
                box_h=float(rng.uniform(20.0, 240.0)),
                confidence=float(rng.uniform(0.3, 0.7)),
                frame_index=frame_index,
            )
        )
    return out
