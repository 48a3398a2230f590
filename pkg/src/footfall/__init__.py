"""footfall: edge people counting and retail conversion analytics.

Ingests per-frame person detections from an entrance camera stream, tracks
individuals so each visit is counted exactly once, rolls the counts up into
daily footfall and conversion-rate records, persists them in an append-only
event log, and serves them over an HTTP API, CSV export, report figures,
and a web dashboard.
"""

from .analytics import (
    DailyRecord,
    HourlyHistogram,
    conversion_rate,
    rollup_day,
    traffic_from_count,
    trend,
)
from .ingest import (
    BBox,
    Detection,
    DetectionFrame,
    filter_confidence,
    parse_frame,
    preprocess,
    serialize_frame,
)
from .pipeline import CountingPipeline, LiveStatus, ReplaySummary
from .simulate import GroundTruth, NoiseSpec, PersonPath, Scenario, generate, random_scenario
from .store import DailyTable, EventLog, EventLogEntry, export_csv, replay
from .tracker import FrameEvents, Track, Tracker, TrackerConfig, TrackState, associate, iou

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "CountingPipeline",
    "DailyRecord",
    "DailyTable",
    "Detection",
    "DetectionFrame",
    "EventLog",
    "EventLogEntry",
    "FrameEvents",
    "GroundTruth",
    "HourlyHistogram",
    "LiveStatus",
    "NoiseSpec",
    "PersonPath",
    "ReplaySummary",
    "Scenario",
    "Track",
    "Tracker",
    "TrackerConfig",
    "TrackState",
    "associate",
    "conversion_rate",
    "export_csv",
    "filter_confidence",
    "generate",
    "iou",
    "parse_frame",
    "preprocess",
    "random_scenario",
    "replay",
    "rollup_day",
    "serialize_frame",
    "traffic_from_count",
    "trend",
]
