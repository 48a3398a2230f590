import datetime as dt

import pytest
from fastapi.testclient import TestClient

from footfall.pipeline import CountingPipeline
from footfall.service import ServiceState, create_app
from footfall.simulate import generate
from footfall.store import DailyTable, EventLog

from conftest import spaced_scenario

UTC = dt.timezone.utc


@pytest.fixture
def served(tmp_path):
    """App over a store holding one replayed day (10 crossings on 2019-07-01)."""
    log = EventLog(tmp_path, UTC)
    table = DailyTable(UTC)
    pipeline = CountingPipeline(log, table)
    frames, truth = generate(spaced_scenario(10, spacing=200, presence=100))
    for frame in frames:
        pipeline.process_frame(frame)
    pipeline.finish()
    state = ServiceState(log=log, table=table, tz=UTC, pipeline=pipeline)
    client = TestClient(create_app(state))
    yield client, state, truth
    log.close()


class TestLive:
    def test_unavailable_without_pipeline(self, tmp_path):
        log = EventLog(tmp_path, UTC)
        state = ServiceState(log=log, table=DailyTable(UTC), tz=UTC, pipeline=None)
        client = TestClient(create_app(state))
        response = client.get("/api/live")
        assert response.status_code == 503
        log.close()

    def test_zeros_before_any_frame(self, tmp_path):
        log = EventLog(tmp_path, UTC)
        table = DailyTable(UTC)
        state = ServiceState(
            log=log, table=table, tz=UTC, pipeline=CountingPipeline(log, table)
        )
        client = TestClient(create_app(state))
        body = client.get("/api/live").json()
        assert body == {
            "date": None,
            "active_tracks": 0,
            "people_counted_so_far": 0,
            "traffic_so_far": 0,
            "last_frame_timestamp_ms": None,
        }
        log.close()

    def test_day_totals_and_snapshot_stability(self, served):
        client, _, truth = served
        first = client.get("/api/live")
        second = client.get("/api/live")
        assert first.content == second.content
        body = first.json()
        assert body["people_counted_so_far"] == truth.person_count == 10
        assert body["traffic_so_far"] == 5


class TestDays:
    def test_empty_store(self, tmp_path):
        log = EventLog(tmp_path, UTC)
        state = ServiceState(log=log, table=DailyTable(UTC), tz=UTC)
        client = TestClient(create_app(state))
        assert client.get("/api/days").json() == []
        log.close()

    def test_range_and_derived_invariants(self, served):
        client, _, _ = served
        records = client.get("/api/days", params={"from": "2019-06-01", "to": "2019-12-31"}).json()
        assert len(records) == 1
        record = records[0]
        assert record["date"] == "2019-07-01"
        assert record["traffic"] * 2 + record["unpaired"] == record["people_counted"]

    def test_bad_range_is_400(self, served):
        client, _, _ = served
        response = client.get("/api/days", params={"from": "2019-07-02", "to": "2019-07-01"})
        assert response.status_code == 400

    def test_garbage_date_is_400(self, served):
        client, _, _ = served
        assert client.get("/api/days", params={"from": "yesterday"}).status_code == 400

    def test_read_consistency(self, served):
        client, _, _ = served
        assert client.get("/api/days").content == client.get("/api/days").content


class TestHourly:
    def test_unknown_date_is_404(self, served):
        client, _, _ = served
        assert client.get("/api/days/2024-01-01/hourly").status_code == 404

    def test_buckets_conserve_count(self, served):
        client, _, _ = served
        body = client.get("/api/days/2019-07-01/hourly").json()
        record = client.get("/api/days").json()[0]
        assert sum(body["buckets"]) == record["people_counted"]
        # the whole simulated day sits inside hour 9 UTC
        assert body["buckets"][9] == record["people_counted"]
        assert len(body["buckets"]) == 24


class TestTransactions:
    def test_put_recomputes_conversion(self, served):
        client, _, _ = served
        response = client.put("/api/days/2019-07-01/transactions", json={"count": 1})
        assert response.status_code == 200
        body = response.json()
        assert body["transactions"] == 1
        assert body["conversion_rate_percent"] == pytest.approx(20.0)  # 1 / 5 * 100

    def test_zero_traffic_day_stores_count_without_rate(self, served):
        client, state, _ = served
        today = dt.datetime.now(UTC).date().isoformat()
        response = client.put(f"/api/days/{today}/transactions", json={"count": 4})
        assert response.status_code == 200
        body = response.json()
        assert body["transactions"] == 4
        assert body["conversion_rate_percent"] is None

    def test_negative_count_is_400(self, served):
        client, _, _ = served
        response = client.put("/api/days/2019-07-01/transactions", json={"count": -1})
        assert response.status_code == 400

    def test_non_integer_count_is_400(self, served):
        client, _, _ = served
        response = client.put("/api/days/2019-07-01/transactions", json={"count": "ten"})
        assert response.status_code == 400

    def test_unknown_past_date_is_404(self, served):
        client, _, _ = served
        response = client.put("/api/days/2018-01-01/transactions", json={"count": 3})
        assert response.status_code == 404

    def test_overwrite_is_audited_last_write_wins(self, served):
        client, state, _ = served
        client.put("/api/days/2019-07-01/transactions", json={"count": 3})
        body = client.put("/api/days/2019-07-01/transactions", json={"count": 7}).json()
        assert body["transactions"] == 7


class TestTrend:
    def test_trend_served_from_analytics(self, served):
        client, _, _ = served
        client.put("/api/days/2019-07-01/transactions", json={"count": 1})
        points = client.get("/api/trend", params={"window": 7}).json()
        assert points == [
            {"date": "2019-07-01", "traffic_avg": 5.0, "conversion_avg": 20.0}
        ]


class TestExport:
    def test_csv_streams_store_export_verbatim(self, served):
        client, state, _ = served
        from footfall.store import export_csv

        response = client.get("/api/export.csv")
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/csv")
        assert response.text == export_csv(state.table.records())

    def test_empty_store_header_only(self, tmp_path):
        log = EventLog(tmp_path, UTC)
        state = ServiceState(log=log, table=DailyTable(UTC), tz=UTC)
        client = TestClient(create_app(state))
        assert client.get("/api/export.csv").text == (
            "date,people_counted,traffic,unpaired,transactions,conversion_rate\n"
        )
        log.close()


class TestFramesOverHttp:
    def test_disabled_by_default(self, served):
        client, _, _ = served
        response = client.post("/api/frames", content="{}")
        assert response.status_code in (404, 405)

    def test_http_ingest_equals_cli_replay(self, tmp_path):
        # path equivalence: the same stream stored via POST /api/frames and
        # via the replay pipeline must yield identical tables
        frames, _ = generate(spaced_scenario(5, spacing=150, presence=90))
        from footfall.ingest import serialize_frame

        lines = [serialize_frame(f) for f in frames]

        replay_log = EventLog(tmp_path / "replay", UTC)
        replay_table = DailyTable(UTC)
        replay_pipeline = CountingPipeline(replay_log, replay_table)
        for line in lines:
            replay_pipeline.process_line(line)
        replay_pipeline.finish()
        replay_log.close()

        http_log = EventLog(tmp_path / "http", UTC)
        http_table = DailyTable(UTC)
        http_pipeline = CountingPipeline(http_log, http_table)
        state = ServiceState(
            log=http_log, table=http_table, tz=UTC, pipeline=http_pipeline, frames_over_http=True
        )
        client = TestClient(create_app(state))
        body = "".join(line + "\n" for line in lines)
        assert client.post("/api/frames", content=body).status_code == 200
        http_pipeline.finish()
        http_log.close()

        assert http_table.snapshot() == replay_table.snapshot()

    def test_enabled_ingests_wire_lines(self, tmp_path):
        log = EventLog(tmp_path, UTC)
        table = DailyTable(UTC)
        pipeline = CountingPipeline(log, table)
        state = ServiceState(
            log=log, table=table, tz=UTC, pipeline=pipeline, frames_over_http=True
        )
        client = TestClient(create_app(state))
        lines = (
            '{"stream_id":"cam0","frame_index":0,"timestamp_ms":1561971600000,"detections":[]}\n'
            '{"stream_id":"cam0","frame_index":1,"timestamp_ms":1561971600033,"detections":[]}\n'
        )
        response = client.post("/api/frames", content=lines)
        assert response.status_code == 200
        assert response.json() == {"frames": 2}
        assert client.get("/api/live").json()["last_frame_timestamp_ms"] == 1561971600033

        bad = client.post("/api/frames", content="garbage\n")
        assert bad.status_code == 400
        assert "line 1" in bad.json()["detail"]
        log.close()
