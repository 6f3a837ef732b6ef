"""Frame-to-frame tracker that keeps driver identity stable through dropouts.

Association is by driver_id (liveries are unique classes), with confidence,
IoU against the constant-velocity prediction, and input order breaking ties
between detections of the same driver.  Boxes are EMA-smoothed; confirmed
tracks coast through up to ``max_misses`` frames without a detection before
being dropped.  All state transitions are pure functions, so a tracker run
is deterministic for a given detection stream.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .errors import OutOfOrderFrame
from .geometry import BBox
from .scenesim import Detection


class TrackState(str, enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    COASTING = "coasting"


@dataclass(frozen=True)
class TrackerParams:
    confirm_hits: int = 3
    max_misses: int = 5
    smoothing_alpha: float = 0.6
    gate_distance: float = 150.0

    def __post_init__(self) -> None:
        if self.confirm_hits < 1:
            raise ValueError("confirm_hits must be >= 1")
        if self.max_misses < 0:
            raise ValueError("max_misses must be >= 0")
        if not 0.0 < self.smoothing_alpha <= 1.0:
            raise ValueError("smoothing_alpha must lie in (0, 1]")
        if self.gate_distance <= 0:
            raise ValueError("gate_distance must be positive")


@dataclass(frozen=True)
class Track:
    """Immutable per-driver track snapshot."""

    track_id: int
    driver_id: int
    bbox: BBox
    velocity: tuple[float, float] = (0.0, 0.0)
    age: int = 0
    consecutive_misses: int = 0
    consecutive_hits: int = 1
    state: TrackState = TrackState.TENTATIVE
    last_confidence: float = 1.0


@dataclass(frozen=True)
class TrackerState:
    params: TrackerParams = field(default_factory=TrackerParams)
    tracks: tuple[Track, ...] = ()
    next_track_id: int = 1
    last_frame_id: int | None = None


@dataclass(frozen=True)
class Association:
    matches: tuple[tuple[int, int], ...]
    unmatched_tracks: tuple[int, ...]
    unmatched_detections: tuple[int, ...]


def predict_bbox(track: Track) -> BBox:
    """Constant-velocity prediction: translate the box, keep its size."""
    vx, vy = track.velocity
    return BBox(
        track.bbox.x_min + vx,
        track.bbox.y_min + vy,
        track.bbox.x_max + vx,
        track.bbox.y_max + vy,
    )


def predict(state: TrackerState) -> tuple[BBox, ...]:
    """Predicted boxes aligned with ``state.tracks``."""
    return tuple(predict_bbox(track) for track in state.tracks)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0 when either box is empty or they are disjoint."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    union = a.width * a.height + b.width * b.height - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def _center_distance(a: BBox, b: BBox) -> float:
    ax, ay = a.center
    bx, by = b.center
    return ((ax - bx) ** 2 + (ay - by) ** 2) ** 0.5


def associate(
    tracks: Sequence[Track],
    predictions: Sequence[BBox],
    detections: Sequence[Detection],
    gate_distance: float,
) -> Association:
    """Match detections to tracks by driver_id.

    Among detections sharing a driver_id the highest confidence wins, ties
    broken by larger IoU with the prediction, then by input order.  Matches
    whose centers sit farther than ``gate_distance`` apart are discarded,
    leaving both sides unmatched.
    """
    by_driver: dict[int, list[int]] = {}
    for det_index, detection in enumerate(detections):
        by_driver.setdefault(detection.driver_id, []).append(det_index)

    matches: list[tuple[int, int]] = []
    matched_detections: set[int] = set()
    unmatched_tracks: list[int] = []
    for track_index, track in enumerate(tracks):
        candidates = by_driver.get(track.driver_id, [])
        if not candidates:
            unmatched_tracks.append(track_index)
            continue
        prediction = predictions[track_index]
        best = min(
            candidates,
            key=lambda di: (
                -detections[di].confidence,
                -iou(prediction, detections[di].bbox),
                di,
            ),
        )
        if _center_distance(prediction, detections[best].bbox) > gate_distance:
            unmatched_tracks.append(track_index)
            continue
        matches.append((track_index, best))
        matched_detections.add(best)

    unmatched_detections = tuple(
        di for di in range(len(detections)) if di not in matched_detections
    )
    return Association(
        matches=tuple(matches),
        unmatched_tracks=tuple(unmatched_tracks),
        unmatched_detections=unmatched_detections,
    )


def _spawn_candidates(
    detections: Sequence[Detection], indices: Iterable[int], live_drivers: set[int]
) -> list[Detection]:
    """Pick at most one spawn detection per driver_id without a live track."""
    best_by_driver: dict[int, int] = {}
    for det_index in indices:
        detection = detections[det_index]
        if detection.driver_id in live_drivers:
            continue
        current = best_by_driver.get(detection.driver_id)
        if current is None or detections[current].confidence < detection.confidence:
            best_by_driver[detection.driver_id] = det_index
    return [detections[i] for _, i in sorted(best_by_driver.items())]


def step(
    state: TrackerState, detections: Sequence[Detection], frame_id: int
) -> tuple[TrackerState, tuple[Track, ...]]:
    """Advance one frame; returns the new state and the publishable snapshot.

    The snapshot contains confirmed and coasting tracks only, sorted by
    track_id.  Raises OutOfOrderFrame when frame_id does not increase.
    """
    if state.last_frame_id is not None and frame_id <= state.last_frame_id:
        raise OutOfOrderFrame(
            f"frame_id {frame_id} not greater than {state.last_frame_id}"
        )
    params = state.params
    predictions = predict(state)
    association = associate(state.tracks, predictions, detections, params.gate_distance)

    survivors: list[Track] = []
    for track_index, det_index in association.matches:
        track = state.tracks[track_index]
        detection = detections[det_index]
        predicted = predictions[track_index]
        alpha = params.smoothing_alpha
        smoothed = BBox(
            alpha * detection.bbox.x_min + (1.0 - alpha) * predicted.x_min,
            alpha * detection.bbox.y_min + (1.0 - alpha) * predicted.y_min,
            alpha * detection.bbox.x_max + (1.0 - alpha) * predicted.x_max,
            alpha * detection.bbox.y_max + (1.0 - alpha) * predicted.y_max,
        )
        old_cx, old_cy = track.bbox.center
        new_cx, new_cy = smoothed.center
        hits = track.consecutive_hits + 1
        new_state = track.state
        if track.state is TrackState.COASTING:
            new_state = TrackState.CONFIRMED
        elif track.state is TrackState.TENTATIVE and hits >= params.confirm_hits:
            new_state = TrackState.CONFIRMED
        survivors.append(
            replace(
                track,
                bbox=smoothed,
                velocity=(new_cx - old_cx, new_cy - old_cy),
                age=track.age + 1,
                consecutive_misses=0,
                consecutive_hits=hits,
                state=new_state,
                last_confidence=detection.confidence,
            )
        )

    for track_index in association.unmatched_tracks:
        track = state.tracks[track_index]
        misses = track.consecutive_misses + 1
        if misses > params.max_misses:
            continue
        new_state = track.state
        if track.state is TrackState.CONFIRMED:
            new_state = TrackState.COASTING
        survivors.append(
            replace(
                track,
                bbox=predictions[track_index],
                age=track.age + 1,
                consecutive_misses=misses,
                consecutive_hits=0,
                state=new_state,
            )
        )

    live_drivers = {track.driver_id for track in survivors}
    next_track_id = state.next_track_id
    for detection in _spawn_candidates(
        detections, association.unmatched_detections, live_drivers
    ):
        spawn_state = (
            TrackState.CONFIRMED if params.confirm_hits <= 1 else TrackState.TENTATIVE
        )
        survivors.append(
            Track(
                track_id=next_track_id,
                driver_id=detection.driver_id,
                bbox=detection.bbox,
                state=spawn_state,
                last_confidence=detection.confidence,
            )
        )
        next_track_id += 1

    survivors.sort(key=lambda track: track.track_id)
    new_tracker_state = TrackerState(
        params=params,
        tracks=tuple(survivors),
        next_track_id=next_track_id,
        last_frame_id=frame_id,
    )
    snapshot = tuple(
        track
        for track in survivors
        if track.state in (TrackState.CONFIRMED, TrackState.COASTING)
    )
    return new_tracker_state, snapshot


class Tracker:
    """Stateful convenience wrapper around the functional tracker core."""

    def __init__(self, params: TrackerParams | None = None) -> None:
        self.state = TrackerState(params=params or TrackerParams())

    def step(self, detections: Sequence[Detection], frame_id: int) -> tuple[Track, ...]:
        self.state, snapshot = step(self.state, detections, frame_id)
        return snapshot
