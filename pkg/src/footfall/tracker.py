"""IoU-based multi-object tracking with a count-once lifecycle.

Each person entering the camera view is represented by one track. A track is
born Tentative from an unmatched detection, becomes Confirmed after enough
associations, and is finalized when the person has been gone longer than
``max_misses`` frames (or at flush). Only Confirmed tracks count toward
footfall, and each counts exactly once, at finalization: a person is counted
when they have left the frame, not while they are in it.

Association is deterministic greedy matching on IoU overlap: candidate
(track, detection) pairs at or above the threshold are taken best-first,
with ties broken by lower track id, then lower detection index. Prediction
is the track's last box; entrance crossings are short enough that a motion
model has not been needed (a constant-velocity upgrade would slot in at
``associate``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .ingest import BBox, Detection, DetectionFrame, OutOfOrderFrame

__all__ = [
    "TrackState",
    "Track",
    "TrackerConfig",
    "FrameEvents",
    "Tracker",
    "iou",
    "associate",
    "OutOfOrderFrame",
]


class TrackState(enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    FINALIZED_COUNTED = "finalized_counted"
    FINALIZED_DROPPED = "finalized_dropped"


@dataclass
class Track:
    """One person's presence through the frame."""

    id: int
    state: TrackState
    last_box: BBox
    hits: int
    misses: int
    first_seen_ms: int
    last_seen_ms: int


@dataclass(frozen=True)
class TrackerConfig:
    iou_threshold: float = 0.3
    min_hits: int = 3
    max_misses: int = 15

    def __post_init__(self) -> None:
        if not (0.0 < self.iou_threshold < 1.0):
            raise ValueError(f"iou_threshold must be in (0,1): {self.iou_threshold}")
        if self.min_hits < 1:
            raise ValueError(f"min_hits must be >= 1: {self.min_hits}")
        if self.max_misses < 1:
            raise ValueError(f"max_misses must be >= 1: {self.max_misses}")


@dataclass(frozen=True)
class FrameEvents:
    """Track ids that changed lifecycle state during one step (disjoint lists)."""

    spawned: tuple[int, ...] = ()
    confirmed: tuple[int, ...] = ()
    finalized_counted: tuple[int, ...] = ()
    finalized_dropped: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return bool(
            self.spawned or self.confirmed or self.finalized_counted or self.finalized_dropped
        )


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    if ix <= 0.0:
        return 0.0
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def associate(
    track_boxes: Sequence[tuple[int, BBox]],
    detections: Sequence[Detection],
    iou_threshold: float,
) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Greedy one-to-one matching of tracks to detections.

    All pairs with IoU >= iou_threshold are considered best-first (ties:
    smaller track id, then smaller detection index); a pair is accepted when
    both sides are still free. Returns (matches as (track_id, detection
    index) pairs, unmatched track ids, unmatched detection indices).
    """
    candidates = []
    for track_id, box in track_boxes:
        for det_index, det in enumerate(detections):
            overlap = iou(box, det.box)
            if overlap >= iou_threshold:
                candidates.append((overlap, track_id, det_index))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))

    matches: list[tuple[int, int]] = []
    taken_tracks: set[int] = set()
    taken_dets: set[int] = set()
    for overlap, track_id, det_index in candidates:
        if track_id in taken_tracks or det_index in taken_dets:
            continue
        matches.append((track_id, det_index))
        taken_tracks.add(track_id)
        taken_dets.add(det_index)

    unmatched_tracks = [tid for tid, _ in track_boxes if tid not in taken_tracks]
    unmatched_dets = [i for i in range(len(detections)) if i not in taken_dets]
    return matches, unmatched_tracks, unmatched_dets


class Tracker:
    """Sequential tracker for one detection stream.

    Frames must be presented in strictly increasing frame_index order. The
    instance may be handed between threads only between step calls.
    """

    def __init__(self, config: TrackerConfig | None = None) -> None:
        self.config = config or TrackerConfig()
        self._tracks: dict[int, Track] = {}
        self._next_id = 1
        self._last_frame_index: int | None = None
        self.last_timestamp_ms: int | None = None
        # cumulative lifecycle counters; spawned == active + counted + dropped
        self.spawned_total = 0
        self.counted_total = 0
        self.dropped_total = 0

    @property
    def active_count(self) -> int:
        return len(self._tracks)

    def active_tracks(self) -> list[Track]:
        return list(self._tracks.values())

    def step(self, frame: DetectionFrame) -> FrameEvents:
        """Advance the tracker by one frame and report lifecycle events."""
        if self._last_frame_index is not None and frame.frame_index <= self._last_frame_index:
            raise OutOfOrderFrame(
                f"frame_index {frame.frame_index} not greater than previous "
                f"{self._last_frame_index}"
            )
        ts = frame.timestamp_ms
        cfg = self.config

        track_boxes = [(t.id, t.last_box) for t in self._tracks.values()]
        matches, unmatched_tracks, unmatched_dets = associate(
            track_boxes, frame.detections, cfg.iou_threshold
        )

        spawned: list[int] = []
        confirmed: list[int] = []
        counted: list[int] = []
        dropped: list[int] = []

        for track_id, det_index in matches:
            track = self._tracks[track_id]
            track.last_box = frame.detections[det_index].box
            track.hits += 1
            track.misses = 0
            track.last_seen_ms = ts
            if track.state is TrackState.TENTATIVE and track.hits >= cfg.min_hits:
                track.state = TrackState.CONFIRMED
                confirmed.append(track_id)

        for track_id in unmatched_tracks:
            track = self._tracks[track_id]
            if track.misses + 1 > cfg.max_misses:
                self._finalize(track, counted, dropped)
            else:
                track.misses += 1

        for det_index in unmatched_dets:
            det = frame.detections[det_index]
            state = TrackState.CONFIRMED if cfg.min_hits <= 1 else TrackState.TENTATIVE
            track = Track(
                id=self._next_id,
                state=state,
                last_box=det.box,
                hits=1,
                misses=0,
                first_seen_ms=ts,
                last_seen_ms=ts,
            )
            self._next_id += 1
            self._tracks[track.id] = track
            self.spawned_total += 1
            spawned.append(track.id)

        self._last_frame_index = frame.frame_index
        self.last_timestamp_ms = ts
        return FrameEvents(tuple(spawned), tuple(confirmed), tuple(counted), tuple(dropped))

    def flush(self) -> FrameEvents:
        """Finalize every live track (end of stream or end of day).

        Confirmed tracks are counted, Tentative ones dropped; the tracker is
        left empty, so a second flush emits nothing.
        """
        counted: list[int] = []
        dropped: list[int] = []
        for track in list(self._tracks.values()):
            self._finalize(track, counted, dropped)
        return FrameEvents((), (), tuple(counted), tuple(dropped))

    def _finalize(self, track: Track, counted: list[int], dropped: list[int]) -> None:
        del self._tracks[track.id]
        if track.state is TrackState.CONFIRMED:
            track.state = TrackState.FINALIZED_COUNTED
            self.counted_total += 1
            counted.append(track.id)
        else:
            track.state = TrackState.FINALIZED_DROPPED
            self.dropped_total += 1
            dropped.append(track.id)
