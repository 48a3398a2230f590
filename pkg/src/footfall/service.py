"""Operator-facing HTTP API over the store and the live pipeline.

Endpoints (JSON unless noted):

    GET  /api/live                        live counts for the open day
    GET  /api/days?from&to                daily records, date ascending
    GET  /api/days/{date}/hourly          24-bucket finalization histogram
    GET  /api/trend?window&from&to        moving averages over daily records
    PUT  /api/days/{date}/transactions    enter the day's transaction count
    GET  /api/export.csv                  the store's CSV export, verbatim
    POST /api/frames                      wire-format ingest (config flag)
    /ui                                   the dashboard, when built

Status mapping: validation errors 400, unknown dates 404, pipeline
unavailable 503. The same operations are callable in-process (the CLI uses
them without the HTTP server): see `set_transactions`, `get_days`,
`get_hourly`.
"""

from __future__ import annotations

import datetime as dt
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse, RedirectResponse, Response
from fastapi.staticfiles import StaticFiles

from . import ingest, store
from .analytics import DailyRecord, HourlyHistogram, TrendPoint, trend
from .pipeline import CountingPipeline, LiveStatus
from .store import DailyTable, EventLog


class UnknownDate(KeyError):
    pass


class InvalidCount(ValueError):
    pass


class BadRange(ValueError):
    pass


class ServiceUnavailable(RuntimeError):
    pass


def set_transactions(
    log: EventLog,
    table: DailyTable,
    date: dt.date,
    count: int,
    *,
    tz: dt.tzinfo,
    now_ms: int | None = None,
    lock: threading.RLock | None = None,
) -> DailyRecord:
    """Store the day's transaction count and recompute its conversion rate.

    Allowed for any date that already has a record, or for today; repeat
    calls overwrite, with the full history kept in the event log.
    """
    if count < 0:
        raise InvalidCount(f"transaction count must be >= 0: {count}")
    today = dt.datetime.now(tz).date()
    if not table.has_date(date) and date != today:
        raise UnknownDate(date.isoformat())
    if now_ms is None:
        now_ms = int(time.time() * 1000)
    guard = lock if lock is not None else threading.RLock()
    with guard:
        entry = log.append_event(
            "transaction_set", now_ms, {"date": date.isoformat(), "count": count}
        )
        table.apply(entry)
    record = table.record(date)
    assert record is not None
    return record


def get_days(table: DailyTable, date_from: dt.date | None, date_to: dt.date | None) -> list[DailyRecord]:
    if date_from is not None and date_to is not None and date_from > date_to:
        raise BadRange(f"from {date_from} is after to {date_to}")
    records = table.records()
    if date_from is not None:
        records = [r for r in records if r.date >= date_from]
    if date_to is not None:
        records = [r for r in records if r.date <= date_to]
    return records


def get_hourly(table: DailyTable, date: dt.date) -> HourlyHistogram:
    histogram = table.histogram(date)
    if histogram is None:
        raise UnknownDate(date.isoformat())
    return histogram


def record_json(r: DailyRecord) -> dict:
    return {
        "date": r.date.isoformat(),
        "people_counted": r.people_counted,
        "traffic": r.traffic,
        "unpaired": r.unpaired,
        "transactions": r.transactions,
        "conversion_rate_percent": r.conversion_rate_percent,
    }


def live_json(s: LiveStatus) -> dict:
    return {
        "date": s.date.isoformat() if s.date else None,
        "active_tracks": s.active_tracks,
        "people_counted_so_far": s.people_counted_so_far,
        "traffic_so_far": s.traffic_so_far,
        "last_frame_timestamp_ms": s.last_frame_timestamp_ms,
    }


def trend_json(p: TrendPoint) -> dict:
    return {
        "date": p.date.isoformat(),
        "traffic_avg": p.traffic_avg,
        "conversion_avg": p.conversion_avg,
    }


@dataclass
class ServiceState:
    """Everything a running service shares between routes."""

    log: EventLog
    table: DailyTable
    tz: dt.tzinfo
    pipeline: CountingPipeline | None = None
    frames_over_http: bool = False
    lenient: bool = False
    ui_dir: Path | None = None

    @property
    def write_lock(self) -> threading.RLock:
        if self.pipeline is not None:
            return self.pipeline.lock
        if not hasattr(self, "_own_lock"):
            self._own_lock = threading.RLock()
        return self._own_lock


def _bad_request(message: str) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": message})


def _parse_date(text: str) -> dt.date:
    return dt.date.fromisoformat(text)


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="footfall", docs_url=None, redoc_url=None)

    @app.get("/api/live")
    def api_live():
        if state.pipeline is None:
            return JSONResponse(status_code=503, content={"detail": "pipeline not started"})
        return live_json(state.pipeline.live_status())

    @app.get("/api/days")
    def api_days(
        date_from: str | None = Query(default=None, alias="from"),
        date_to: str | None = Query(default=None, alias="to"),
    ):
        try:
            lo = _parse_date(date_from) if date_from else None
            hi = _parse_date(date_to) if date_to else None
            records = get_days(state.table, lo, hi)
        except (ValueError, BadRange) as exc:
            return _bad_request(str(exc))
        return [record_json(r) for r in records]

    @app.get("/api/days/{date}/hourly")
    def api_hourly(date: str):
        try:
            day = _parse_date(date)
        except ValueError as exc:
            return _bad_request(str(exc))
        try:
            histogram = get_hourly(state.table, day)
        except UnknownDate:
            return JSONResponse(status_code=404, content={"detail": f"no record for {date}"})
        return {"date": histogram.date.isoformat(), "buckets": list(histogram.buckets)}

    @app.get("/api/trend")
    def api_trend(
        window: int = Query(default=7, ge=1),
        date_from: str | None = Query(default=None, alias="from"),
        date_to: str | None = Query(default=None, alias="to"),
    ):
        try:
            lo = _parse_date(date_from) if date_from else None
            hi = _parse_date(date_to) if date_to else None
            records = get_days(state.table, lo, hi)
        except (ValueError, BadRange) as exc:
            return _bad_request(str(exc))
        return [trend_json(p) for p in trend(records, window)]

    @app.put("/api/days/{date}/transactions")
    async def api_set_transactions(date: str, request: Request):
        try:
            day = _parse_date(date)
        except ValueError as exc:
            return _bad_request(str(exc))
        try:
            body = await request.json()
        except Exception:
            return _bad_request("body must be JSON")
        count = body.get("count") if isinstance(body, dict) else None
        if not isinstance(count, int) or isinstance(count, bool):
            return _bad_request("body must be {\"count\": <non-negative integer>}")
        try:
            record = set_transactions(
                state.log, state.table, day, count, tz=state.tz, lock=state.write_lock
            )
        except InvalidCount as exc:
            return _bad_request(str(exc))
        except UnknownDate:
            return JSONResponse(status_code=404, content={"detail": f"no record for {date}"})
        return record_json(record)

    @app.get("/api/export.csv")
    def api_export():
        csv_text = store.export_csv(state.table.records())
        return Response(content=csv_text, media_type="text/csv; charset=utf-8")

    if state.frames_over_http and state.pipeline is not None:

        @app.post("/api/frames")
        async def api_frames(request: Request):
            body = (await request.body()).decode("utf-8")
            pipeline = state.pipeline
            assert pipeline is not None
            processed = 0
            for line_no, line in enumerate(body.splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    pipeline.process_line(line, strict=not state.lenient)
                except (ingest.MalformedRecord, ingest.InvalidField, ingest.OutOfOrderFrame) as exc:
                    return _bad_request(f"line {line_no}: {exc}")
                processed += 1
            return {"frames": processed}

    if state.ui_dir is not None and state.ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=state.ui_dir, html=True), name="ui")

        @app.get("/")
        def index():
            return RedirectResponse(url="/ui/")

    else:

        @app.get("/")
        def index_plain():
            return PlainTextResponse(
                "footfall API - dashboard not built; see /api/live, /api/days, /api/export.csv"
            )

    return app
