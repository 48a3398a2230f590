"""Durable local persistence: append-only event log, daily table, CSV export.

The "database" is a directory of newline-delimited JSON log files, one per
local day (``events-YYYY-MM-DD.log``), written by a single writer. Every
pipeline event (track spawn/confirm/count/drop, transaction entry, day
close) is appended with a global, contiguous sequence number and fsynced
before it is acknowledged. The daily-record table is never stored; it is a
pure fold over the log, so replaying the log always reproduces exactly the
live table.

Crash recovery: a crash can only tear the tail of the newest file. On
replay, entries are read in order until the first corrupt one; the rest of
the log is discarded with a warning. The writer truncates a torn trailing
line before appending, so log files stay physically valid.
"""

from __future__ import annotations

import datetime as dt
import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .analytics import (
    DailyRecord,
    HourlyHistogram,
    build_daily_record,
    local_datetime,
)

EVENT_KINDS = ("spawn", "confirm", "count", "drop", "transaction_set", "day_close")

CSV_HEADER = "date,people_counted,traffic,unpaired,transactions,conversion_rate"

_LOG_PREFIX = "events-"
_LOG_SUFFIX = ".log"


class SequenceGap(ValueError):
    """Appended entry does not continue the sequence contiguously."""


class StorageFailure(RuntimeError):
    """The underlying files cannot be written or are beyond recovery."""


class CorruptEntry(ValueError):
    """A log line cannot be decoded as a valid entry."""


@dataclass(frozen=True)
class EventLogEntry:
    """One immutable audit record."""

    sequence: int
    timestamp_ms: int
    kind: str
    payload: Mapping[str, object]

    def __post_init__(self) -> None:
        if self.sequence < 1:
            raise ValueError(f"sequence must be >= 1: {self.sequence}")
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind: {self.kind!r}")

    def to_line(self) -> str:
        return json.dumps(
            {
                "sequence": self.sequence,
                "timestamp_ms": self.timestamp_ms,
                "kind": self.kind,
                "payload": dict(self.payload),
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_line(cls, line: str) -> "EventLogEntry":
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptEntry(f"undecodable entry: {exc}") from exc
        if not isinstance(obj, dict):
            raise CorruptEntry("entry must be a JSON object")
        try:
            sequence = obj["sequence"]
            timestamp_ms = obj["timestamp_ms"]
            kind = obj["kind"]
            payload = obj["payload"]
        except KeyError as exc:
            raise CorruptEntry(f"entry missing field {exc}") from exc
        if not isinstance(sequence, int) or not isinstance(timestamp_ms, int):
            raise CorruptEntry("sequence and timestamp_ms must be integers")
        if not isinstance(payload, dict):
            raise CorruptEntry("payload must be an object")
        try:
            return cls(sequence, timestamp_ms, kind, payload)
        except ValueError as exc:
            raise CorruptEntry(str(exc)) from exc


@dataclass
class ReplayReport:
    entries_applied: int = 0
    discarded_lines: int = 0
    warnings: list[str] = field(default_factory=list)


@dataclass
class _DayState:
    buckets: list[int] = field(default_factory=lambda: [0] * 24)
    total: int = 0
    transactions: int | None = None
    closed: bool = False


class DailyTable:
    """Daily rollups derived by folding event entries.

    Only ``count``, ``transaction_set`` and ``day_close`` affect the table;
    spawn/confirm/drop entries are audit-only. The fold is deterministic, so
    a table built live and one built by replaying the log agree after any
    prefix of events.
    """

    def __init__(self, tz: dt.tzinfo = dt.timezone.utc) -> None:
        self.tz = tz
        self._days: dict[dt.date, _DayState] = {}

    def _day(self, date: dt.date) -> _DayState:
        state = self._days.get(date)
        if state is None:
            state = self._days[date] = _DayState()
        return state

    def apply(self, entry: EventLogEntry) -> None:
        if entry.kind == "count":
            when = local_datetime(entry.timestamp_ms, self.tz)
            state = self._day(when.date())
            state.buckets[when.hour] += 1
            state.total += 1
        elif entry.kind == "transaction_set":
            date = dt.date.fromisoformat(str(entry.payload["date"]))
            count = entry.payload["count"]
            if not isinstance(count, int) or count < 0:
                raise CorruptEntry(f"transaction_set count must be a non-negative int: {count!r}")
            self._day(date).transactions = count  # last write wins; log keeps history
        elif entry.kind == "day_close":
            date = dt.date.fromisoformat(str(entry.payload["date"]))
            self._day(date).closed = True

    def dates(self) -> list[dt.date]:
        return sorted(self._days)

    def has_date(self, date: dt.date) -> bool:
        return date in self._days

    def record(self, date: dt.date) -> DailyRecord | None:
        state = self._days.get(date)
        if state is None:
            return None
        return build_daily_record(date, state.total, state.transactions)

    def records(self) -> list[DailyRecord]:
        return [
            build_daily_record(date, s.total, s.transactions)
            for date, s in sorted(self._days.items())
        ]

    def histogram(self, date: dt.date) -> HourlyHistogram | None:
        state = self._days.get(date)
        if state is None:
            return None
        return HourlyHistogram(date, tuple(state.buckets))

    def people_counted(self, date: dt.date) -> int:
        state = self._days.get(date)
        return 0 if state is None else state.total

    def snapshot(self) -> dict[str, tuple[tuple[int, ...], int | None, bool]]:
        """Comparable view of the whole table (for fold-equivalence checks)."""
        return {
            date.isoformat(): (tuple(s.buckets), s.transactions, s.closed)
            for date, s in self._days.items()
        }


def _log_files(data_dir: Path) -> list[Path]:
    return sorted(data_dir.glob(f"{_LOG_PREFIX}*{_LOG_SUFFIX}"))


class EventLog:
    """Single-writer append-only log over one data directory.

    Appends are durable before they are acknowledged (write + flush +
    fsync). ``append_many`` batches several entries under a single fsync,
    which the pipeline uses to group all events of one frame.
    """

    def __init__(self, data_dir: Path | str, tz: dt.tzinfo = dt.timezone.utc) -> None:
        self.data_dir = Path(data_dir)
        self.tz = tz
        self._lock = threading.Lock()
        self._file = None
        self._file_path: Path | None = None
        try:
            self.data_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageFailure(f"cannot create data dir {self.data_dir}: {exc}") from exc
        # appends never go to a file older than the newest existing one, so
        # file-name order always equals sequence order on replay
        self._current_date = self._newest_file_date()
        self._last_sequence = self._recover_last_sequence()

    def _newest_file_date(self) -> dt.date | None:
        files = _log_files(self.data_dir)
        if not files:
            return None
        name = files[-1].name
        return dt.date.fromisoformat(name[len(_LOG_PREFIX) : -len(_LOG_SUFFIX)])

    def _recover_last_sequence(self) -> int:
        last = 0
        files = _log_files(self.data_dir)
        for i, path in enumerate(files):
            try:
                text = path.read_text(encoding="utf-8", errors="replace")
            except OSError as exc:
                raise StorageFailure(f"cannot read log {path}: {exc}") from exc
            lines = text.split("\n")
            torn_tail = bool(lines and lines[-1] != "")
            if lines and lines[-1] == "":
                lines.pop()
            for j, line in enumerate(lines):
                if not line.strip():
                    continue
                try:
                    entry = EventLogEntry.from_line(line)
                except CorruptEntry as exc:
                    # a crash can only produce an unparseable, unterminated
                    # tail on the newest file (truncated before appending);
                    # corruption anywhere else would strand new appends
                    # behind the replay recovery rule, so refuse to build on it
                    if i == len(files) - 1 and torn_tail and j == len(lines) - 1:
                        return last
                    raise StorageFailure(
                        f"corrupt entry in log {path.name}: {exc}; "
                        "repair or remove the file before appending"
                    ) from exc
                last = entry.sequence
        return last

    @property
    def last_sequence(self) -> int:
        return self._last_sequence

    def _path_for(self, timestamp_ms: int) -> Path:
        date = local_datetime(timestamp_ms, self.tz).date()
        if self._current_date is None or date > self._current_date:
            self._current_date = date
        return self.data_dir / f"{_LOG_PREFIX}{self._current_date.isoformat()}{_LOG_SUFFIX}"

    def _truncate_torn_tail(self, path: Path) -> None:
        # a crash can leave the last line unterminated: drop it if it is a
        # partial write, or just restore the newline if all content bytes
        # made it to disk
        try:
            with open(path, "r+b") as f:
                data = f.read()
                if not data or data.endswith(b"\n"):
                    return
                keep = data.rfind(b"\n") + 1
                tail = data[keep:]
                try:
                    EventLogEntry.from_line(tail.decode("utf-8"))
                except (CorruptEntry, UnicodeDecodeError):
                    f.truncate(keep)
                else:
                    f.write(b"\n")
        except OSError as exc:
            raise StorageFailure(f"cannot recover log {path}: {exc}") from exc

    def _file_for(self, timestamp_ms: int):
        path = self._path_for(timestamp_ms)
        if path != self._file_path:
            if self._file is not None:
                self._file.flush()
                os.fsync(self._file.fileno())
                self._file.close()
            if path.exists():
                self._truncate_torn_tail(path)
            try:
                self._file = open(path, "a", encoding="utf-8", newline="\n")
            except OSError as exc:
                raise StorageFailure(f"cannot open log {path}: {exc}") from exc
            self._file_path = path
        return self._file

    def append(self, entry: EventLogEntry) -> int:
        """Durably append one entry; returns the acknowledged sequence."""
        self.append_many([entry])
        return entry.sequence

    def append_many(self, entries: Iterable[EventLogEntry]) -> None:
        """Durably append a batch of entries with one fsync."""
        entries = list(entries)
        if not entries:
            return
        with self._lock:
            expected = self._last_sequence
            for entry in entries:
                expected += 1
                if entry.sequence != expected:
                    raise SequenceGap(
                        f"expected sequence {expected}, got {entry.sequence}"
                    )
            try:
                f = None
                for entry in entries:
                    f = self._file_for(entry.timestamp_ms)
                    f.write(entry.to_line() + "\n")
                assert f is not None
                f.flush()
                os.fsync(f.fileno())
            except OSError as exc:
                raise StorageFailure(f"append failed: {exc}") from exc
            self._last_sequence = expected

    def next_sequence(self) -> int:
        return self._last_sequence + 1

    def make_entry(
        self, kind: str, timestamp_ms: int, payload: Mapping[str, object]
    ) -> EventLogEntry:
        return EventLogEntry(self.next_sequence(), timestamp_ms, kind, payload)

    def append_event(
        self, kind: str, timestamp_ms: int, payload: Mapping[str, object]
    ) -> EventLogEntry:
        entry = self.make_entry(kind, timestamp_ms, payload)
        self.append(entry)
        return entry

    def close(self) -> None:
        with self._lock:
            if self._file is not None:
                self._file.close()
                self._file = None
                self._file_path = None


def read_log(data_dir: Path | str) -> tuple[list[EventLogEntry], ReplayReport]:
    """Read every entry across the day files, applying the recovery rule.

    Reading stops at the first corrupt or out-of-sequence entry; the
    remainder of the log is counted as discarded and reported.
    """
    report = ReplayReport()
    entries: list[EventLogEntry] = []
    lines: list[tuple[str, str]] = []  # (file name, line)
    for path in _log_files(Path(data_dir)):
        text = path.read_text(encoding="utf-8", errors="replace")
        for line in text.split("\n"):
            if line.strip():
                lines.append((path.name, line))
    last_sequence = 0
    for i, (name, line) in enumerate(lines):
        try:
            entry = EventLogEntry.from_line(line)
        except CorruptEntry as exc:
            report.discarded_lines = len(lines) - i
            report.warnings.append(
                f"{name}: corrupt entry, discarding it and {len(lines) - i - 1} later line(s): {exc}"
            )
            break
        if entry.sequence != last_sequence + 1:
            report.discarded_lines = len(lines) - i
            report.warnings.append(
                f"{name}: sequence {entry.sequence} after {last_sequence}, "
                f"discarding it and {len(lines) - i - 1} later line(s)"
            )
            break
        last_sequence = entry.sequence
        entries.append(entry)
    report.entries_applied = len(entries)
    return entries, report


def replay(
    data_dir: Path | str, tz: dt.tzinfo = dt.timezone.utc
) -> tuple[DailyTable, ReplayReport]:
    """Reconstruct the daily table by folding the whole log."""
    entries, report = read_log(data_dir)
    table = DailyTable(tz)
    for entry in entries:
        table.apply(entry)
    return table, report


def export_csv(records: Iterable[DailyRecord]) -> str:
    """Render daily records as CSV, bit-exactly.

    Header ``date,people_counted,traffic,unpaired,transactions,conversion_rate``,
    one row per date ascending, absent values empty, rates with 2 decimals,
    UNIX newlines.
    """
    out = [CSV_HEADER]
    for r in sorted(records, key=lambda r: r.date):
        transactions = "" if r.transactions is None else str(r.transactions)
        rate = (
            ""
            if r.conversion_rate_percent is None
            else f"{r.conversion_rate_percent:.2f}"
        )
        out.append(
            f"{r.date.isoformat()},{r.people_counted},{r.traffic},{r.unpaired},"
            f"{transactions},{rate}"
        )
    return "\n".join(out) + "\n"


def parse_csv(text: str) -> list[DailyRecord]:
    """Parse the export format back into records (rates at 2-decimal precision)."""
    lines = [line for line in text.split("\n") if line]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"bad CSV header: {lines[0] if lines else ''!r}")
    records = []
    for line in lines[1:]:
        fields = line.split(",")
        if len(fields) != 6:
            raise ValueError(f"bad CSV row: {line!r}")
        date_s, people_s, traffic_s, unpaired_s, tx_s, rate_s = fields
        records.append(
            DailyRecord(
                date=dt.date.fromisoformat(date_s),
                people_counted=int(people_s),
                traffic=int(traffic_s),
                unpaired=int(unpaired_s),
                transactions=None if tx_s == "" else int(tx_s),
                conversion_rate_percent=None if rate_s == "" else float(rate_s),
            )
        )
    return records
