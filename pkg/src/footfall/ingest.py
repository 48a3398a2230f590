"""Detection wire format: parsing, validation, confidence filtering, and the
detector-adapter preprocessing contract.

The wire format is newline-delimited UTF-8 JSON, one camera frame per line:

    {"stream_id": "cam0", "frame_index": 0, "timestamp_ms": 1700000000000,
     "detections": [{"box": [0.1, 0.1, 0.2, 0.3], "confidence": 0.9}]}

Boxes are normalized to [0, 1] with origin at the top-left, so recorded
streams replay across camera resolutions. Any detector that emits this
format can feed the pipeline; `preprocess` documents the input contract an
adapter must satisfy when driving the kind of person-detection network this
system was designed around (BGR channel order, NCHW layout, raw 0-255
floats).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

DEFAULT_CONFIDENCE_THRESHOLD = 0.5

_FRAME_FIELDS = ("stream_id", "frame_index", "timestamp_ms", "detections")
_DETECTION_FIELDS = ("box", "confidence")


class MalformedRecord(ValueError):
    """Line is not a structurally valid wire-format record."""


class InvalidField(ValueError):
    """A structurally valid record carries an out-of-domain value."""


class EmptyImage(ValueError):
    """Image has zero height or width."""


class OutOfOrderFrame(ValueError):
    """Frame ordering violated within a stream."""


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in normalized frame coordinates, origin top-left."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(isinstance(c, (int, float)) and math.isfinite(c) for c in coords):
            raise InvalidField(f"box coordinates must be finite numbers: {coords}")
        if not (0.0 <= self.x_min < self.x_max <= 1.0 and 0.0 <= self.y_min < self.y_max <= 1.0):
            raise InvalidField(f"box must have positive area inside [0,1]^2: {coords}")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def as_list(self) -> list[float]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]


@dataclass(frozen=True)
class Detection:
    box: BBox
    confidence: float

    def __post_init__(self) -> None:
        c = self.confidence
        if not (isinstance(c, (int, float)) and math.isfinite(c) and 0.0 <= c <= 1.0):
            raise InvalidField(f"confidence must be in [0,1]: {c!r}")


@dataclass(frozen=True)
class DetectionFrame:
    """One camera frame's person detections."""

    stream_id: str
    frame_index: int
    timestamp_ms: int
    detections: tuple[Detection, ...]

    def __post_init__(self) -> None:
        if not self.stream_id:
            raise InvalidField("stream_id must be non-empty")
        if self.frame_index < 0:
            raise InvalidField(f"frame_index must be non-negative: {self.frame_index}")


def _require_int(value: object, name: str) -> int:
    # bool is an int subclass; reject it explicitly
    if not isinstance(value, int) or isinstance(value, bool):
        raise MalformedRecord(f"field {name!r} must be an integer, got {value!r}")
    return value


def _check_fields(obj: dict, required: tuple[str, ...], strict: bool, what: str) -> None:
    for name in required:
        if name not in obj:
            raise MalformedRecord(f"{what} is missing field {name!r}")
    if strict:
        unknown = set(obj) - set(required)
        if unknown:
            raise MalformedRecord(f"{what} has unknown field(s): {sorted(unknown)}")


def parse_frame(line: str, *, strict: bool = True) -> DetectionFrame:
    """Parse one wire-format line into a validated DetectionFrame.

    In strict mode unknown fields are rejected; in lenient mode they are
    ignored. Raises MalformedRecord for structural problems and InvalidField
    for out-of-domain values.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedRecord(f"record must be a JSON object, got {type(obj).__name__}")
    _check_fields(obj, _FRAME_FIELDS, strict, "record")

    stream_id = obj["stream_id"]
    if not isinstance(stream_id, str):
        raise MalformedRecord(f"field 'stream_id' must be a string, got {stream_id!r}")
    frame_index = _require_int(obj["frame_index"], "frame_index")
    timestamp_ms = _require_int(obj["timestamp_ms"], "timestamp_ms")

    raw_dets = obj["detections"]
    if not isinstance(raw_dets, list):
        raise MalformedRecord("field 'detections' must be an array")
    detections = []
    for i, raw in enumerate(raw_dets):
        if not isinstance(raw, dict):
            raise MalformedRecord(f"detection {i} must be an object")
        _check_fields(raw, _DETECTION_FIELDS, strict, f"detection {i}")
        box = raw["box"]
        if (
            not isinstance(box, list)
            or len(box) != 4
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in box)
        ):
            raise MalformedRecord(f"detection {i} 'box' must be an array of 4 numbers")
        conf = raw["confidence"]
        if not isinstance(conf, (int, float)) or isinstance(conf, bool):
            raise MalformedRecord(f"detection {i} 'confidence' must be a number")
        detections.append(Detection(BBox(*(float(v) for v in box)), float(conf)))

    return DetectionFrame(stream_id, frame_index, timestamp_ms, tuple(detections))


def serialize_frame(frame: DetectionFrame) -> str:
    """Encode a frame as one wire-format line (no trailing newline).

    parse_frame(serialize_frame(f)) == f for every valid frame.
    """
    return json.dumps(
        {
            "stream_id": frame.stream_id,
            "frame_index": frame.frame_index,
            "timestamp_ms": frame.timestamp_ms,
            "detections": [
                {"box": d.box.as_list(), "confidence": d.confidence} for d in frame.detections
            ],
        },
        separators=(",", ":"),
    )


def filter_confidence(frame: DetectionFrame, threshold: float) -> DetectionFrame:
    """Keep exactly the detections with confidence >= threshold, order preserved."""
    if not (0.0 <= threshold <= 1.0):
        raise ValueError(f"threshold must be in [0,1]: {threshold}")
    kept = tuple(d for d in frame.detections if d.confidence >= threshold)
    if len(kept) == len(frame.detections):
        return frame
    return DetectionFrame(frame.stream_id, frame.frame_index, frame.timestamp_ms, kept)


class StreamValidator:
    """Per-stream ordering checks: frame_index strictly increasing,
    timestamp_ms non-decreasing. One instance per sequential consumer."""

    def __init__(self) -> None:
        self._last: dict[str, tuple[int, int]] = {}

    def validate(self, frame: DetectionFrame) -> DetectionFrame:
        prev = self._last.get(frame.stream_id)
        if prev is not None:
            last_index, last_ts = prev
            if frame.frame_index <= last_index:
                raise OutOfOrderFrame(
                    f"frame_index must increase within stream {frame.stream_id!r}: "
                    f"{frame.frame_index} after {last_index}"
                )
            if frame.timestamp_ms < last_ts:
                raise OutOfOrderFrame(
                    f"timestamp_ms must not decrease within stream {frame.stream_id!r}: "
                    f"{frame.timestamp_ms} after {last_ts}"
                )
        self._last[frame.stream_id] = (frame.frame_index, frame.timestamp_ms)
        return frame


def read_frames(lines: Iterable[str], *, strict: bool = True) -> Iterator[DetectionFrame]:
    """Parse and order-validate a stream of wire-format lines.

    Blank lines are skipped. Errors are re-raised with the 1-based line
    number prefixed to the message.
    """
    validator = StreamValidator()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            yield validator.validate(parse_frame(line, strict=strict))
        except (MalformedRecord, InvalidField, OutOfOrderFrame) as exc:
            raise type(exc)(f"line {line_no}: {exc}") from exc


@dataclass(frozen=True)
class PixelImage:
    """8-bit RGB image, shape (height, width, 3), row-major."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = self.pixels
        if not isinstance(arr, np.ndarray) or arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError("pixels must be a (height, width, 3) array")
        if arr.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {arr.dtype}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise EmptyImage(f"image has zero extent: {arr.shape[:2]}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class InputTensor:
    """Detector input: float32, shape (1, 3, H, W), channel order BGR."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = self.values
        if not isinstance(v, np.ndarray) or v.ndim != 4 or v.shape[0] != 1 or v.shape[1] != 3:
            raise ValueError("values must have shape (1, 3, H, W)")
        if v.dtype != np.float32:
            raise ValueError(f"values must be float32, got {v.dtype}")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return tuple(self.values.shape)  # type: ignore[return-value]


def _resize_bilinear(pixels: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel-centered sampling, float32 output."""
    h, w = pixels.shape[:2]
    if (out_h, out_w) == (h, w):
        return pixels.astype(np.float32)
    src = pixels.astype(np.float32)
    ys = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0.0, h - 1.0)
    xs = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0.0, w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0).astype(np.float32)[:, None, None]
    wx = (xs - x0).astype(np.float32)[None, :, None]
    top = src[y0][:, x0] * (1.0 - wx) + src[y0][:, x1] * wx
    bottom = src[y1][:, x0] * (1.0 - wx) + src[y1][:, x1] * wx
    return top * (1.0 - wy) + bottom * wy


def swap_channel_order(values: np.ndarray) -> np.ndarray:
    """Reverse the channel axis of an NCHW tensor (RGB <-> BGR). Involution."""
    return np.ascontiguousarray(values[:, ::-1])


def preprocess(image: PixelImage, target_h: int, target_w: int) -> InputTensor:
    """Resize and repack an RGB image for the detector.

    Output is (1, 3, target_h, target_w) float32 with channels reordered to
    BGR; pixel values are carried as raw 0-255 floats, not rescaled, matching
    the convention of the pre-trained retail person detectors this adapter
    contract targets.
    """
    if target_h <= 0 or target_w <= 0:
        raise ValueError(f"target size must be positive: {target_h}x{target_w}")
    resized = _resize_bilinear(image.pixels, target_h, target_w)
    chw = np.transpose(resized, (2, 0, 1))
    bgr = chw[::-1]
    return InputTensor(np.ascontiguousarray(bgr[np.newaxis], dtype=np.float32))
