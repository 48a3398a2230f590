"""Operator command line.

Subcommands: replay a recorded detection file, serve the HTTP API (and
dashboard), generate simulator scenarios, enter daily transactions, export
the CSV, and render the report figures.

Exit codes, fixed for scripting:
    0  success
    2  malformed input or invalid value
    3  storage failure
    4  unknown date
"""

from __future__ import annotations

import argparse
import datetime as dt
import sys
import threading
from pathlib import Path
from typing import Iterable

from . import ingest, service, simulate, store
from .config import AppConfig, load_config
from .pipeline import CountingPipeline
from .store import DailyTable, EventLog, StorageFailure

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_STORAGE = 3
EXIT_UNKNOWN_DATE = 4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data-dir", type=Path, default=None, help="store directory")
    parser.add_argument("--timezone", default=None, help="IANA timezone for day boundaries")
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")


def _resolve(args: argparse.Namespace, **extra) -> AppConfig:
    overrides = {
        "data_dir": getattr(args, "data_dir", None),
        "timezone": getattr(args, "timezone", None),
        **extra,
    }
    return load_config(args.config, overrides=overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="footfall",
        description="Edge people counting and retail conversion analytics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("replay", help="run a detection file through the pipeline")
    _add_common(p)
    p.add_argument("--input", required=True, help="wire-format file, or - for stdin")
    p.add_argument("--lenient", action="store_true", help="ignore unknown wire fields")
    p.add_argument("--confidence-threshold", type=float, default=None)

    p = sub.add_parser("serve", help="start the HTTP API (and dashboard)")
    _add_common(p)
    p.add_argument("--input", default=None, help="wire-format file or - for stdin, fed in background")
    p.add_argument("--bind", default=None, help="host:port (default 127.0.0.1:8000)")
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--frames-over-http", action="store_true", help="enable POST /api/frames")
    p.add_argument("--ui-dir", type=Path, default=None, help="built dashboard assets to serve at /ui")

    p = sub.add_parser("simulate", help="generate a synthetic detection stream + truth sidecar")
    _add_common(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--people", type=int, required=True, help="maximum concurrent persons")
    p.add_argument("--out", type=Path, required=True, help="output stream path")
    p.add_argument("--frames", type=int, default=None, help="scenario length in frames")
    p.add_argument("--date", default="2019-07-01", help="calendar date of the stream")
    p.add_argument("--start-hour", type=int, default=9, help="local hour the stream starts")
    p.add_argument("--dropout", type=float, default=0.0, help="per-frame dropout probability")
    p.add_argument("--max-gap", type=int, default=0, help="max consecutive dropouts per person")
    p.add_argument("--jitter", type=float, default=0.0, help="box center jitter sigma")

    p = sub.add_parser("transactions", help="enter the transaction count for a date")
    _add_common(p)
    p.add_argument("--date", required=True)
    p.add_argument("--count", type=int, required=True)

    p = sub.add_parser("export", help="write the daily-record CSV")
    _add_common(p)
    p.add_argument("--out", required=True, help="output path, or - for stdout")

    p = sub.add_parser("report", help="write CSV plus trend/peak-hour figures")
    _add_common(p)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--window", type=int, default=7, help="moving-average window in days")
    p.add_argument("--date", default=None, help="date for the peak-hours figure (default: latest)")

    return parser


def _input_lines(spec: str) -> Iterable[str]:
    if spec == "-":
        return sys.stdin
    return Path(spec).read_text(encoding="utf-8").splitlines()


def _open_store(cfg: AppConfig) -> tuple[EventLog, DailyTable]:
    tz = cfg.tzinfo()
    log = EventLog(cfg.data_dir, tz)
    table, report = store.replay(cfg.data_dir, tz)
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return log, table


def cmd_replay(args: argparse.Namespace) -> int:
    cfg = _resolve(args, confidence_threshold=args.confidence_threshold)
    try:
        log, table = _open_store(cfg)
    except StorageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STORAGE
    pipeline = CountingPipeline(
        log,
        table,
        tracker_config=cfg.tracker_config(),
        confidence_threshold=cfg.confidence_threshold,
        tz=cfg.tzinfo(),
    )
    try:
        for frame in ingest.read_frames(_input_lines(args.input), strict=not args.lenient):
            pipeline.process_frame(frame)
        summary = pipeline.finish()
    except (ingest.MalformedRecord, ingest.InvalidField, ingest.OutOfOrderFrame) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (StorageFailure, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STORAGE
    finally:
        log.close()
    print(
        f"frames={summary.frames} people_counted={summary.people_counted} "
        f"traffic={summary.traffic} unpaired={summary.unpaired} days={len(summary.days)}"
    )
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    if args.people < 0:
        print("error: --people must be >= 0", file=sys.stderr)
        return EXIT_INVALID
    try:
        date = dt.date.fromisoformat(args.date)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    noise = simulate.NoiseSpec(
        jitter_sigma=args.jitter,
        dropout_prob=args.dropout,
        max_consecutive_dropouts=args.max_gap,
    )
    params = simulate.ScenarioParams(noise=noise)
    if args.frames is not None:
        params = simulate.ScenarioParams(duration_frames=args.frames, noise=noise)
    start = dt.datetime.combine(date, dt.time(hour=args.start_hour), tzinfo=cfg.tzinfo())
    try:
        scenario = simulate.random_scenario(args.seed, args.people, params)
        frames, truth = simulate.generate(
            scenario, start_timestamp_ms=int(start.timestamp() * 1000)
        )
        simulate.write_stream(args.out, frames)
        truth_path = simulate.truth_path_for(args.out)
        simulate.write_truth(truth_path, truth)
    except simulate.InvalidScenario as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STORAGE
    print(f"wrote {args.out} and {truth_path} (persons={truth.person_count})")
    return EXIT_OK


def cmd_transactions(args: argparse.Namespace) -> int:
    if args.count < 0:
        print("error: --count must be >= 0", file=sys.stderr)
        return EXIT_INVALID
    try:
        date = dt.date.fromisoformat(args.date)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    cfg = _resolve(args)
    try:
        log, table = _open_store(cfg)
    except StorageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STORAGE
    try:
        record = service.set_transactions(log, table, date, args.count, tz=cfg.tzinfo())
    except service.UnknownDate:
        print(f"error: no record for {args.date}", file=sys.stderr)
        return EXIT_UNKNOWN_DATE
    except StorageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STORAGE
    finally:
        log.close()
    rate = (
        "-"
        if record.conversion_rate_percent is None
        else f"{record.conversion_rate_percent:.2f}"
    )
    print(
        f"date={record.date.isoformat()} traffic={record.traffic} "
        f"transactions={record.transactions} conversion_rate={rate}"
    )
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    try:
        _, table = _open_store(cfg)
        csv_text = store.export_csv(table.records())
        if args.out == "-":
            sys.stdout.write(csv_text)
        else:
            Path(args.out).write_text(csv_text, encoding="utf-8")
    except (StorageFailure, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STORAGE
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    peak_date = None
    if args.date is not None:
        try:
            peak_date = dt.date.fromisoformat(args.date)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
    from .report import write_report  # defers the matplotlib import

    try:
        _, table = _open_store(cfg)
        written = write_report(table, args.out, window=args.window, peak_date=peak_date)
    except (StorageFailure, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STORAGE
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    cfg = _resolve(args, bind=args.bind, frames_over_http=args.frames_over_http or None)
    try:
        log, table = _open_store(cfg)
    except StorageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STORAGE
    tz = cfg.tzinfo()
    pipeline = CountingPipeline(
        log,
        table,
        tracker_config=cfg.tracker_config(),
        confidence_threshold=cfg.confidence_threshold,
        tz=tz,
    )
    ui_dir = args.ui_dir if args.ui_dir else _default_ui_dir()
    state = service.ServiceState(
        log=log,
        table=table,
        tz=tz,
        pipeline=pipeline,
        frames_over_http=cfg.frames_over_http,
        lenient=cfg.lenient or args.lenient,
        ui_dir=ui_dir,
    )
    app = service.create_app(state)

    if args.input:
        def feed() -> None:
            try:
                for frame in ingest.read_frames(_input_lines(args.input), strict=not args.lenient):
                    pipeline.process_frame(frame)
                pipeline.finish()
            except Exception as exc:  # surfaced on stderr; the API stays up
                print(f"input feed stopped: {exc}", file=sys.stderr)

        threading.Thread(target=feed, name="frame-feed", daemon=True).start()

    import uvicorn

    host, port = cfg.bind_host_port()
    print(f"serving on http://{host}:{port} (data: {cfg.data_dir})")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return EXIT_OK


def _default_ui_dir() -> Path | None:
    candidate = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
    return candidate if candidate.is_dir() else None


_COMMANDS = {
    "replay": cmd_replay,
    "serve": cmd_serve,
    "simulate": cmd_simulate,
    "transactions": cmd_transactions,
    "export": cmd_export,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
