import datetime as dt
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from footfall.analytics import rollup_day
from footfall.store import (
    CSV_HEADER,
    DailyTable,
    EventLog,
    EventLogEntry,
    SequenceGap,
    StorageFailure,
    export_csv,
    parse_csv,
    read_log,
    replay,
)
from footfall.analytics import build_daily_record

UTC = dt.timezone.utc
JULY1 = dt.date(2019, 7, 1)


def ts(hour, minute=0, second=0, date=JULY1):
    return int(
        dt.datetime.combine(date, dt.time(hour, minute, second), tzinfo=UTC).timestamp() * 1000
    )


class TestAppend:
    def test_first_entry_acknowledged_as_one(self, tmp_path):
        log = EventLog(tmp_path)
        ack = log.append(EventLogEntry(1, ts(9), "spawn", {"track_id": 1}))
        assert ack == 1
        assert log.last_sequence == 1

    def test_sequence_gap_rejected(self, tmp_path):
        log = EventLog(tmp_path)
        log.append_event("spawn", ts(9), {"track_id": 1})
        with pytest.raises(SequenceGap):
            log.append(EventLogEntry(5, ts(9), "confirm", {"track_id": 1}))

    def test_append_then_reopen_byte_identical(self, tmp_path):
        log = EventLog(tmp_path)
        entry = log.append_event("count", ts(9, 30), {"track_id": 3})
        log.close()
        files = list(tmp_path.glob("events-*.log"))
        assert [p.name for p in files] == ["events-2019-07-01.log"]
        assert files[0].read_text(encoding="utf-8") == entry.to_line() + "\n"
        reopened = EventLog(tmp_path)
        assert reopened.last_sequence == 1
        entries, report = read_log(tmp_path)
        assert entries == [entry]
        assert report.discarded_lines == 0

    def test_one_file_per_day(self, tmp_path):
        log = EventLog(tmp_path)
        log.append_event("count", ts(9), {"track_id": 1})
        log.append_event("count", ts(10, date=dt.date(2019, 7, 2)), {"track_id": 2})
        names = sorted(p.name for p in tmp_path.glob("events-*.log"))
        assert names == ["events-2019-07-01.log", "events-2019-07-02.log"]

    def test_earlier_dates_never_reopen_old_files(self, tmp_path):
        # appends are routed monotonically so file order stays replay order
        log = EventLog(tmp_path)
        log.append_event("count", ts(10, date=dt.date(2019, 7, 2)), {"track_id": 1})
        log.append_event("transaction_set", ts(9), {"date": "2019-07-01", "count": 5})
        names = sorted(p.name for p in tmp_path.glob("events-*.log"))
        assert names == ["events-2019-07-02.log"]
        table, report = replay(tmp_path)
        assert not report.warnings
        assert table.record(JULY1).transactions == 5

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            EventLogEntry(1, 0, "explode", {})


class TestReplay:
    def test_empty_log_empty_table(self, tmp_path):
        table, report = replay(tmp_path)
        assert table.records() == []
        assert report.entries_applied == 0

    def test_replay_matches_live_rollup(self, tmp_path):
        # oracle: analytics.rollup_day over the same finalization timestamps
        stamps = [ts(9, 5), ts(9, 40), ts(11, 2), ts(17, 59)]
        log = EventLog(tmp_path)
        for i, stamp in enumerate(stamps, start=1):
            log.append(EventLogEntry(i, stamp, "count", {"track_id": i}))
        log.append_event("transaction_set", ts(18), {"date": JULY1.isoformat(), "count": 1})
        log.append_event("day_close", ts(23, 59), {"date": JULY1.isoformat()})
        log.close()

        table, report = replay(tmp_path)
        assert not report.warnings
        expected_record, expected_histogram = rollup_day(JULY1, stamps, 1, tz=UTC)
        assert table.record(JULY1) == expected_record
        assert table.histogram(JULY1) == expected_histogram

    def test_torn_final_line_recovers_prefix(self, tmp_path):
        log = EventLog(tmp_path)
        kept = log.append_event("count", ts(9), {"track_id": 1})
        log.close()
        path = tmp_path / "events-2019-07-01.log"
        with open(path, "ab") as f:
            f.write(b'{"sequence":2,"timestamp_ms":123')  # crash mid-write
        table, report = replay(tmp_path)
        assert report.entries_applied == 1
        assert report.discarded_lines == 1
        assert len(report.warnings) == 1
        assert table.record(JULY1).people_counted == 1

        # the writer truncates the torn tail and continues cleanly
        reopened = EventLog(tmp_path)
        assert reopened.last_sequence == 1
        reopened.append_event("count", ts(9, 1), {"track_id": 2})
        reopened.close()
        entries, report = read_log(tmp_path)
        assert [e.sequence for e in entries] == [1, 2]
        assert report.discarded_lines == 0
        assert kept == entries[0]

    def test_corruption_discards_tail_of_log(self, tmp_path):
        log = EventLog(tmp_path)
        log.append_event("count", ts(9), {"track_id": 1})
        log.append_event("count", ts(9, 1), {"track_id": 2})
        log.close()
        path = tmp_path / "events-2019-07-01.log"
        lines = path.read_text().splitlines()
        lines[1] = lines[1][:10] + "#corrupt"
        path.write_text("\n".join(lines) + "\n")
        table, report = replay(tmp_path)
        assert report.entries_applied == 1
        assert report.discarded_lines == 1
        assert table.record(JULY1).people_counted == 1

    def test_writer_refuses_corrupt_non_final_file(self, tmp_path):
        (tmp_path / "events-2019-07-01.log").write_text("not an entry\n")
        (tmp_path / "events-2019-07-02.log").write_text("")
        with pytest.raises(StorageFailure):
            EventLog(tmp_path)

    def test_writer_refuses_terminated_corrupt_line(self, tmp_path):
        # a complete (newline-terminated) corrupt line is not a crash
        # artifact; appending after it would strand the new entries behind
        # the replay recovery rule
        log = EventLog(tmp_path)
        log.append_event("count", ts(9), {"track_id": 1})
        log.close()
        path = tmp_path / "events-2019-07-01.log"
        with open(path, "a") as f:
            f.write("corrupt\n")
        with pytest.raises(StorageFailure):
            EventLog(tmp_path)

    def test_unterminated_but_complete_entry_is_kept(self, tmp_path):
        # crash after the content bytes but before the newline: the entry is
        # durable, so recovery restores the terminator instead of dropping it
        log = EventLog(tmp_path)
        log.append_event("count", ts(9), {"track_id": 1})
        entry2 = log.make_entry("count", ts(9, 1), {"track_id": 2})
        log.close()
        path = tmp_path / "events-2019-07-01.log"
        with open(path, "ab") as f:
            f.write(entry2.to_line().encode("utf-8"))  # no trailing newline
        reopened = EventLog(tmp_path)
        assert reopened.last_sequence == 2
        reopened.append_event("count", ts(9, 2), {"track_id": 3})
        reopened.close()
        entries, report = read_log(tmp_path)
        assert [e.sequence for e in entries] == [1, 2, 3]
        assert report.discarded_lines == 0

    def test_transaction_set_last_write_wins(self, tmp_path):
        log = EventLog(tmp_path)
        log.append_event("transaction_set", ts(10), {"date": JULY1.isoformat(), "count": 5})
        log.append_event("transaction_set", ts(11), {"date": JULY1.isoformat(), "count": 9})
        log.close()
        table, _ = replay(tmp_path)
        assert table.record(JULY1).transactions == 9
        # history stays in the log for audit
        entries, _ = read_log(tmp_path)
        assert [e.payload["count"] for e in entries] == [5, 9]


def _random_event_stream(rng, length):
    """Random plausible event sequence over a few dates, timestamps increasing."""
    dates = [dt.date(2019, 7, d) for d in (1, 2, 3)]
    when = ts(8)
    events = []
    for _ in range(length):
        when += rng.randrange(1, 3_600_000)
        kind = rng.choice(["count", "count", "transaction_set", "day_close", "spawn", "drop"])
        if kind in ("count", "spawn", "drop"):
            payload = {"track_id": rng.randrange(1, 50)}
        elif kind == "transaction_set":
            payload = {"date": rng.choice(dates).isoformat(), "count": rng.randrange(0, 40)}
        else:
            payload = {"date": rng.choice(dates).isoformat()}
        events.append((kind, when, payload))
    return events


class TestLogFoldEquivalence:
    def test_replay_equals_live_table_after_every_prefix(self, tmp_path):
        rng = random.Random(0)
        for stream_index in range(20):
            data_dir = tmp_path / f"stream{stream_index}"
            log = EventLog(data_dir)
            live = DailyTable(UTC)
            for kind, when, payload in _random_event_stream(rng, rng.randrange(1, 25)):
                entry = log.append_event(kind, when, payload)
                live.apply(entry)
                replayed, report = replay(data_dir)
                assert not report.warnings
                assert replayed.snapshot() == live.snapshot()
                assert replayed.records() == live.records()
            log.close()


def records_strategy():
    day = st.integers(1, 28)
    people = st.integers(0, 4000)
    transactions = st.one_of(st.none(), st.integers(0, 5000))
    return st.builds(
        lambda d, p, t: build_daily_record(dt.date(2019, 7, d), p, t),
        day,
        people,
        transactions,
    )


class TestExportCsv:
    def test_empty_is_header_only(self):
        assert export_csv([]) == CSV_HEADER + "\n"

    def test_example_row_byte_exact(self):
        record = build_daily_record(JULY1, 100, 10)
        assert export_csv([record]) == (
            "date,people_counted,traffic,unpaired,transactions,conversion_rate\n"
            "2019-07-01,100,50,0,10,20.00\n"
        )

    def test_absent_values_render_empty(self):
        record = build_daily_record(JULY1, 7)
        line = export_csv([record]).splitlines()[1]
        assert line == "2019-07-01,7,3,1,,"

    def test_rows_sorted_ascending(self):
        records = [
            build_daily_record(dt.date(2019, 7, 3), 2),
            build_daily_record(dt.date(2019, 7, 1), 4),
        ]
        lines = export_csv(records).splitlines()
        assert lines[1].startswith("2019-07-01") and lines[2].startswith("2019-07-03")

    def test_unix_newlines_only(self):
        text = export_csv([build_daily_record(JULY1, 2, 1)])
        assert "\r" not in text and text.endswith("\n")

    @settings(max_examples=60)
    @given(st.dictionaries(st.integers(1, 28), st.tuples(st.integers(0, 4000), st.one_of(st.none(), st.integers(0, 5000))), max_size=8))
    def test_round_trip_at_two_decimals(self, day_map):
        records = [
            build_daily_record(dt.date(2019, 7, day), people, tx)
            for day, (people, tx) in sorted(day_map.items())
        ]
        parsed = parse_csv(export_csv(records))
        assert len(parsed) == len(records)
        for before, after in zip(records, parsed):
            assert (before.date, before.people_counted, before.traffic, before.unpaired) == (
                after.date,
                after.people_counted,
                after.traffic,
                after.unpaired,
            )
            assert before.transactions == after.transactions
            if before.conversion_rate_percent is None:
                assert after.conversion_rate_percent is None
            else:
                assert after.conversion_rate_percent == float(
                    f"{before.conversion_rate_percent:.2f}"
                )

    def test_parse_rejects_bad_header(self):
        with pytest.raises(ValueError):
            parse_csv("nope\n")
