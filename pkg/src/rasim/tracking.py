"""Tracking-by-detection in the image plane.

Each track runs a constant-velocity Kalman filter over ``(u, v, du, dv)``.
Detections are assigned to tracks by minimum-cost bipartite matching on the
squared Mahalanobis distance, restricted to pairs inside the chi-square gate.
Appearance features are not used; association is motion only.

Lifecycle: a new track is ``TENTATIVE``; it becomes ``CONFIRMED`` after
``n_init`` consecutive hits, and a tentative track that misses a frame is
deleted at once. A confirmed track is deleted when ``time_since_update``
reaches ``max_age``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import raise_if
from .vision import Detection

H = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])

CHI2_95_2DOF = 5.991


class TrackStatus(str, enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    DELETED = "deleted"


@dataclass(frozen=True)
class TrackerParams:
    process_noise_accel: float = 400.0  # px/s^2
    measurement_noise: float = 2.0  # px
    gate_threshold: float = CHI2_95_2DOF
    n_init: int = 3
    max_age: int = 30
    init_velocity_std: float = 200.0  # px/s

    def __post_init__(self):
        raise_if(self.problems())

    def problems(self):
        out = []
        for name in ("process_noise_accel", "measurement_noise", "gate_threshold", "init_velocity_std"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                out.append(((name,), f"must be a positive number, got {v!r}"))
        for name in ("n_init", "max_age"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                out.append(((name,), f"must be an integer >= 1, got {v!r}"))
        return out


@dataclass
class TrackState:
    mean: np.ndarray
    covariance: np.ndarray
    track_id: int
    hits: int = 1
    time_since_update: int = 0
    status: TrackStatus = TrackStatus.TENTATIVE
    box_w: float = 0.0
    box_h: float = 0.0

    @property
    def position(self) -> tuple[float, float]:
        return float(self.mean[0]), float(self.mean[1])


def initiate(det: Detection, track_id: int, params: TrackerParams) -> TrackState:
    r2 = params.measurement_noise**2
    v2 = params.init_velocity_std**2
    return TrackState(
        mean=np.array([det.center_u, det.center_v, 0.0, 0.0]),
        covariance=np.diag([r2, r2, v2, v2]),
        track_id=track_id,
        box_w=det.box_w,
        box_h=det.box_h,
    )


def _transition(dt: float) -> np.ndarray:
    F = np.eye(4)
    F[0, 2] = F[1, 3] = dt
    return F


def _process_noise(dt: float, accel_std: float) -> np.ndarray:
    # white-noise acceleration, per axis [[dt^4/4, dt^3/2], [dt^3/2, dt^2]]
    q = accel_std**2
    a, b, c = dt**4 / 4.0, dt**3 / 2.0, dt**2
    return q * np.array(
        [
            [a, 0.0, b, 0.0],
            [0.0, a, 0.0, b],
            [b, 0.0, c, 0.0],
            [0.0, b, 0.0, c],
        ]
    )


def _symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def kf_predict(t: TrackState, dt: float, params: TrackerParams) -> TrackState:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    F = _transition(dt)
    P = F @ t.covariance @ F.T + _process_noise(dt, params.process_noise_accel)
    return replace(
        t,
        mean=F @ t.mean,
        covariance=_symmetrize(P),
        time_since_update=t.time_since_update + 1,
    )


def innovation(t: TrackState, det: Detection, params: TrackerParams) -> tuple[np.ndarray, np.ndarray]:
    """Innovation vector and its covariance ``S = H P H^T + R``."""
    z = np.array([det.center_u, det.center_v])
    y = z - H @ t.mean
    S = H @ t.covariance @ H.T + np.eye(2) * params.measurement_noise**2
    return y, S


def kf_update(t: TrackState, det: Detection, params: TrackerParams) -> TrackState:
    y, S = innovation(t, det, params)
    PHt = t.covariance @ H.T
    try:
        K = np.linalg.solve(S, PHt.T).T
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("singular innovation covariance in Kalman update") from exc
    # Joseph form keeps the posterior symmetric PSD
    I_KH = np.eye(4) - K @ H
    R = np.eye(2) * params.measurement_noise**2
    P = I_KH @ t.covariance @ I_KH.T + K @ R @ K.T
    return replace(
        t,
        mean=t.mean + K @ y,
        covariance=_symmetrize(P),
        hits=t.hits + 1,
        time_since_update=0,
        box_w=det.box_w,
        box_h=det.box_h,
    )


def mahalanobis_sq(y: np.ndarray, S: np.ndarray) -> float:
    try:
        return float(y @ np.linalg.solve(S, y))
    except np.linalg.LinAlgError as exc:
        raise ValueError("innovation covariance is singular") from exc


def gating_distance(t: TrackState, det: Detection, params: TrackerParams) -> float:
    y, S = innovation(t, det, params)
    return max(0.0, mahalanobis_sq(y, S))


def _solve(cost: np.ndarray, feasible: np.ndarray) -> list[tuple[int, int]]:
    """Max-cardinality, then min-cost matching over the feasible entries."""
    if cost.size == 0 or not feasible.any():
        return []
    # Any infeasible pair costs more than a whole feasible matching, so the
    # solver maximises cardinality first; those pairs are dropped afterwards.
    feasible_max = float(np.max(np.where(feasible, cost, 0.0)))
    big = (feasible_max + 1.0) * (min(cost.shape) + 1)
    r, c = linear_sum_assignment(np.where(feasible, cost, big))
    return [(int(i), int(j)) for i, j in zip(r, c) if feasible[i, j]]


def _score(cost: np.ndarray, pairs) -> tuple[int, float]:
    return len(pairs), math.fsum(cost[i, j] for i, j in pairs)


def min_cost_matching(cost: np.ndarray, threshold: float) -> list[tuple[int, int]]:
    """Optimal matching restricted to entries strictly below ``threshold``.

    Maximises the number of matched pairs, then minimises their total cost.
    Equal-cost optima are broken toward the lowest row, then lowest column.
    """
    cost = np.asarray(cost, dtype=float)
    n_rows, n_cols = cost.shape
    feasible = cost < threshold
    best = _solve(cost, feasible)
    if len(best) <= 1 and n_rows <= 1:
        return best
    best_n, best_cost = _score(cost, best)
    tol = 1e-12 * max(1.0, abs(best_cost))

    fixed: list[tuple[int, int]] = []
    free_rows = list(range(n_rows))
    free_cols = list(range(n_cols))
    for i in range(n_rows):
        free_rows.remove(i)
        fixed_n, fixed_cost = _score(cost, fixed)
        options = [j for j in free_cols if feasible[i, j]] + [None]
        for j in options:
            cols = [c for c in free_cols if c != j]
            sub = cost[np.ix_(free_rows, cols)]
            rest = [(free_rows[a], cols[b]) for a, b in _solve(sub, sub < threshold)]
            n = fixed_n + len(rest) + (j is not None)
            total = fixed_cost + math.fsum(cost[a, b] for a, b in rest)
            if j is not None:
                total += cost[i, j]
            if n == best_n and total <= best_cost + tol:
                if j is not None:
                    fixed.append((i, j))
                    free_cols.remove(j)
                break
        else:  # pragma: no cover - rounding corner, keep the solver's answer
            return sorted(best)
    return fixed


def associate(
    tracks: Sequence[TrackState],
    detections: Sequence[Detection],
    params: TrackerParams,
) -> tuple[list[tuple[int, int, float]], list[int], list[int]]:
    """Gated minimum-cost assignment.

    Returns ``(matches, unmatched_tracks, unmatched_detections)`` where matches
    are ``(track_index, detection_index, gate_distance)`` and the other two are
    index lists into the inputs.
    """
    n_t, n_d = len(tracks), len(detections)
    if n_t == 0 or n_d == 0:
        return [], list(range(n_t)), list(range(n_d))
    # tie-break on track_id: solve in id order then map back
    order = sorted(range(n_t), key=lambda k: tracks[k].track_id)
    cost = np.array(
        [[gating_distance(tracks[k], det, params) for det in detections] for k in order]
    )
    pairs = min_cost_matching(cost, params.gate_threshold)
    matches = [(order[r], c, float(cost[r, c])) for r, c in pairs]
    matched_t = {m[0] for m in matches}
    matched_d = {m[1] for m in matches}
    return (
        sorted(matches),
        [k for k in range(n_t) if k not in matched_t],
        [j for j in range(n_d) if j not in matched_d],
    )


@dataclass(frozen=True)
class TrackEvent:
    frame: int
    track_id: int
    status: TrackStatus


@dataclass(frozen=True)
class TrackSnapshot:
    """One row of track history for a processed frame."""

    frame: int
    track_id: int
    status: TrackStatus
    u: float
    v: float
    du: float
    dv: float
    gate_distance: Optional[float]


@dataclass
class Tracker:
    params: TrackerParams = field(default_factory=TrackerParams)
    tracks: list[TrackState] = field(default_factory=list)
    frame: int = -1
    history: list[TrackSnapshot] = field(default_factory=list)
    _next_id: int = 1

    def step(self, detections: Sequence[Detection], dt: float) -> tuple[list[TrackState], list[TrackEvent]]:
        """Advance one processed frame.

        Order: predict, associate, update matched, age unmatched, spawn
        tentative tracks for unmatched detections, prune deleted tracks.
        Returns the confirmed tracks and the status transitions of this frame.
        """
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt!r}")
        self.frame += 1
        p = self.params
        events: list[TrackEvent] = []
        self.history = []

        predicted = [kf_predict(t, dt, p) for t in self.tracks]
        matches, unmatched_t, unmatched_d = associate(predicted, detections, p)

        gates: dict[int, float] = {}
        survivors: list[TrackState] = []
        updated = {}
        for ti, di, g in matches:
            t = kf_update(predicted[ti], detections[di], p)
            if t.status is TrackStatus.TENTATIVE and t.hits >= p.n_init:
                t.status = TrackStatus.CONFIRMED
                events.append(TrackEvent(self.frame, t.track_id, t.status))
            updated[ti] = t
            gates[t.track_id] = g
        deleted: list[TrackState] = []
        for ti, t in enumerate(predicted):
            if ti in updated:
                survivors.append(updated[ti])
                continue
            if t.status is TrackStatus.TENTATIVE or t.time_since_update >= p.max_age:
                t.status = TrackStatus.DELETED
                events.append(TrackEvent(self.frame, t.track_id, t.status))
                deleted.append(t)
            else:
                survivors.append(t)
        for di in unmatched_d:
            t = initiate(detections[di], self._next_id, p)
            self._next_id += 1
            if t.hits >= p.n_init:
                t.status = TrackStatus.CONFIRMED
                events.append(TrackEvent(self.frame, t.track_id, t.status))
            survivors.append(t)

        self.tracks = survivors
        for t in sorted(survivors + deleted, key=lambda s: s.track_id):
            self.history.append(
                TrackSnapshot(
                    self.frame,
                    t.track_id,
                    t.status,
                    float(t.mean[0]),
                    float(t.mean[1]),
                    float(t.mean[2]),
                    float(t.mean[3]),
                    gates.get(t.track_id),
                )
            )
        confirmed = [t for t in self.tracks if t.status is TrackStatus.CONFIRMED]
        return confirmed, events

    def warp(self, mapping: Callable[[float, float], Optional[tuple[float, float]]]) -> None:
        """Re-express every track in new image coordinates.

        Used to cancel camera rotation between frames. The state is pushed
        through the local Jacobian of ``mapping``; a track whose position has
        no image under ``mapping`` is left untouched.
        """
        h = 1e-3
        for t in self.tracks:
            u, v = t.position
            centre = mapping(u, v)
            du_p, du_m = mapping(u + h, v), mapping(u - h, v)
            dv_p, dv_m = mapping(u, v + h), mapping(u, v - h)
            if any(x is None for x in (centre, du_p, du_m, dv_p, dv_m)):
                continue
            J = np.column_stack(
                [
                    (np.subtract(du_p, du_m)) / (2 * h),
                    (np.subtract(dv_p, dv_m)) / (2 * h),
                ]
            )
            T = np.zeros((4, 4))
            T[:2, :2] = J
            T[2:, 2:] = J
            t.mean = np.array([centre[0], centre[1], *(J @ t.mean[2:])])
            t.covariance = _symmetrize(T @ t.covariance @ T.T)

    def get(self, track_id: int) -> Optional[TrackState]:
        for t in self.tracks:
            if t.track_id == track_id:
                return t
        return None

    @property
    def has_live_tracks(self) -> bool:
        return bool(self.tracks)

