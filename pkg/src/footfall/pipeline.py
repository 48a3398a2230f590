"""The end-to-end frame path: ingest -> tracker -> events -> store.

One pipeline instance consumes wire-format frames (from a replayed file,
stdin, or the optional HTTP ingest route), drives one tracker per stream,
and forwards every lifecycle event to the event log and the daily table.
Day boundaries are data-driven: when a frame's local date moves past the
open day, all trackers are flushed (stamped with the old day's last
timestamp so the finalizations land on the day being closed) and a
day_close event is appended. ``finish`` closes the final open day, so a
full replay of a recorded day always produces a complete daily record.

Everything here is deterministic: the same input and configuration produce
the same events, the same log bytes modulo wall clock, and the same table.
"""

from __future__ import annotations

import datetime as dt
import threading
from dataclasses import dataclass

from . import ingest
from .analytics import local_date
from .ingest import DetectionFrame, OutOfOrderFrame
from .store import DailyTable, EventLog, EventLogEntry
from .tracker import FrameEvents, Tracker, TrackerConfig


@dataclass(frozen=True)
class LiveStatus:
    """Snapshot of the open day; every field is consistent at one instant."""

    date: dt.date | None
    active_tracks: int
    people_counted_so_far: int
    traffic_so_far: int
    last_frame_timestamp_ms: int | None


@dataclass(frozen=True)
class ReplaySummary:
    frames: int
    people_counted: int
    traffic: int
    unpaired: int
    days: tuple[dt.date, ...]


class CountingPipeline:
    """Sequential frame consumer feeding the store.

    ``process_frame`` must be called by one consumer at a time; the internal
    lock also serializes it against transaction writes that share the event
    log. Readers never take the lock: ``live_status`` returns the latest
    immutable snapshot.
    """

    def __init__(
        self,
        log: EventLog,
        table: DailyTable,
        *,
        tracker_config: TrackerConfig | None = None,
        confidence_threshold: float = ingest.DEFAULT_CONFIDENCE_THRESHOLD,
        tz: dt.tzinfo = dt.timezone.utc,
    ) -> None:
        self.log = log
        self.table = table
        self.tracker_config = tracker_config or TrackerConfig()
        self.confidence_threshold = confidence_threshold
        self.tz = tz
        self.lock = threading.RLock()
        self._trackers: dict[str, Tracker] = {}
        self._open_date: dt.date | None = None
        self._frames = 0
        self._finished = False
        self._status = LiveStatus(None, 0, 0, 0, None)

    def live_status(self) -> LiveStatus:
        return self._status

    def process_line(self, line: str, *, strict: bool = True) -> None:
        self.process_frame(ingest.parse_frame(line, strict=strict))

    def process_frame(self, frame: DetectionFrame) -> None:
        with self.lock:
            if self._finished:
                raise RuntimeError("pipeline already finished")
            date = local_date(frame.timestamp_ms, self.tz)
            if self._open_date is None:
                self._open_date = date
            elif date != self._open_date:
                if date < self._open_date:
                    raise OutOfOrderFrame(
                        f"frame date {date.isoformat()} precedes open day "
                        f"{self._open_date.isoformat()}"
                    )
                self._close_open_day()
                self._open_date = date

            tracker = self._trackers.get(frame.stream_id)
            if tracker is None:
                tracker = self._trackers[frame.stream_id] = Tracker(self.tracker_config)
            kept = ingest.filter_confidence(frame, self.confidence_threshold)
            events = tracker.step(kept)
            if events:
                self._emit(events, frame.timestamp_ms)
            self._frames += 1
            self._refresh_status(frame.timestamp_ms)

    def finish(self) -> ReplaySummary:
        """Flush everything, close the open day, and summarize the table."""
        with self.lock:
            if not self._finished:
                if self._open_date is not None:
                    self._close_open_day()
                self._finished = True
                self._refresh_status(self._status.last_frame_timestamp_ms)
            records = self.table.records()
            return ReplaySummary(
                frames=self._frames,
                people_counted=sum(r.people_counted for r in records),
                traffic=sum(r.traffic for r in records),
                unpaired=sum(r.unpaired for r in records),
                days=tuple(r.date for r in records),
            )

    def _close_open_day(self) -> None:
        assert self._open_date is not None
        close_ts = max(
            (t.last_timestamp_ms for t in self._trackers.values() if t.last_timestamp_ms),
            default=None,
        )
        for tracker in self._trackers.values():
            events = tracker.flush()
            if events and tracker.last_timestamp_ms is not None:
                self._emit(events, tracker.last_timestamp_ms)
        if close_ts is not None:
            entry = self.log.make_entry(
                "day_close", close_ts, {"date": self._open_date.isoformat()}
            )
            self.log.append(entry)
            self.table.apply(entry)

    def _emit(self, events: FrameEvents, timestamp_ms: int) -> None:
        entries: list[EventLogEntry] = []
        sequence = self.log.next_sequence()
        for kind, ids in (
            ("spawn", events.spawned),
            ("confirm", events.confirmed),
            ("count", events.finalized_counted),
            ("drop", events.finalized_dropped),
        ):
            for track_id in ids:
                entries.append(
                    EventLogEntry(sequence, timestamp_ms, kind, {"track_id": track_id})
                )
                sequence += 1
        self.log.append_many(entries)
        for entry in entries:
            self.table.apply(entry)

    def _refresh_status(self, timestamp_ms: int | None) -> None:
        people = self.table.people_counted(self._open_date) if self._open_date else 0
        self._status = LiveStatus(
            date=self._open_date,
            active_tracks=sum(t.active_count for t in self._trackers.values()),
            people_counted_so_far=people,
            traffic_so_far=people // 2,
            last_frame_timestamp_ms=timestamp_ms,
        )
