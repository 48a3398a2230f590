"""Synthetic entrance-camera detection streams with known ground truth.

Scenarios place persons on linear paths across the view; `generate` renders
them to wire-format frames, optionally perturbed by jitter and dropouts.
Because the ground truth (how many distinct persons appeared, and when) is
known by construction, generated streams serve as the counting oracle for
the tracker.

Randomness comes from Python's ``random.Random`` (Mersenne Twister) using
only its ``random()`` method, whose output sequence for a given seed is
guaranteed stable across Python versions; Gaussian jitter is derived from it
via Box-Muller. Identical (seed, parameters) therefore reproduce
byte-identical streams on any platform.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .ingest import BBox, Detection, DetectionFrame, serialize_frame

# 2019-07-01T09:00:00Z; an arbitrary but fixed default so runs reproduce
DEFAULT_START_TIMESTAMP_MS = 1_561_971_600_000


class InvalidScenario(ValueError):
    """Scenario violates its invariants."""


class Unsatisfiable(RuntimeError):
    """Could not place the requested persons under the separation constraint."""


@dataclass(frozen=True)
class NoiseSpec:
    """Detection noise: center jitter plus per-frame dropouts.

    Consecutive dropouts per person are capped by max_consecutive_dropouts;
    a cap of 0 disables dropouts entirely.
    """

    jitter_sigma: float = 0.0
    dropout_prob: float = 0.0
    max_consecutive_dropouts: int = 0

    def __post_init__(self) -> None:
        if self.jitter_sigma < 0:
            raise InvalidScenario(f"jitter_sigma must be >= 0: {self.jitter_sigma}")
        if not (0.0 <= self.dropout_prob < 1.0):
            raise InvalidScenario(f"dropout_prob must be in [0,1): {self.dropout_prob}")
        if self.max_consecutive_dropouts < 0:
            raise InvalidScenario("max_consecutive_dropouts must be >= 0")


@dataclass(frozen=True)
class PersonPath:
    """A person crossing the view on a straight line.

    Present for frames f with enter_frame <= f < exit_frame; the box center
    moves linearly from start_center toward end_center over that interval.
    """

    enter_frame: int
    exit_frame: int
    start_center: tuple[float, float]
    end_center: tuple[float, float]
    box_w: float
    box_h: float

    def present_at(self, frame: int) -> bool:
        return self.enter_frame <= frame < self.exit_frame

    def center_at(self, frame: int) -> tuple[float, float]:
        t = (frame - self.enter_frame) / (self.exit_frame - self.enter_frame)
        sx, sy = self.start_center
        ex, ey = self.end_center
        return sx + t * (ex - sx), sy + t * (ey - sy)

    def box_at(self, frame: int) -> BBox:
        cx, cy = self.center_at(frame)
        return _box_around(cx, cy, self.box_w, self.box_h)


@dataclass(frozen=True)
class Scenario:
    seed: int
    persons: tuple[PersonPath, ...]
    duration_frames: int
    frame_rate: float = 30.0
    noise: NoiseSpec = NoiseSpec()

    def __post_init__(self) -> None:
        if self.duration_frames <= 0:
            raise InvalidScenario(f"duration_frames must be positive: {self.duration_frames}")
        if self.frame_rate <= 0:
            raise InvalidScenario(f"frame_rate must be positive: {self.frame_rate}")
        for i, p in enumerate(self.persons):
            if not (0 <= p.enter_frame < p.exit_frame <= self.duration_frames):
                raise InvalidScenario(
                    f"person {i}: need 0 <= enter < exit <= duration, got "
                    f"[{p.enter_frame}, {p.exit_frame}) in {self.duration_frames}"
                )
            if not (0.0 < p.box_w < 1.0 and 0.0 < p.box_h < 1.0):
                raise InvalidScenario(f"person {i}: box extents must be in (0,1)")
            for cx, cy in (p.start_center, p.end_center):
                # linear interpolation is convex, so checking the endpoints
                # keeps every intermediate box inside the frame
                if not (
                    p.box_w / 2 <= cx <= 1.0 - p.box_w / 2
                    and p.box_h / 2 <= cy <= 1.0 - p.box_h / 2
                ):
                    raise InvalidScenario(f"person {i}: box leaves [0,1]^2 at ({cx}, {cy})")

    @property
    def person_count(self) -> int:
        return len(self.persons)


@dataclass(frozen=True)
class GroundTruth:
    """What the stream actually contained: the counting oracle."""

    person_count: int
    intervals: tuple[tuple[int, int], ...]

    def to_json(self) -> str:
        return json.dumps(
            {"person_count": self.person_count, "intervals": [list(iv) for iv in self.intervals]}
        )

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        obj = json.loads(text)
        return cls(obj["person_count"], tuple((a, b) for a, b in obj["intervals"]))


@dataclass(frozen=True)
class ScenarioParams:
    """Ranges for the random scenario generator.

    The defaults are tuned so a correct tracker at default configuration can
    count generated scenarios perfectly: boxes are large and slow enough to
    re-associate across a capped dropout gap, and candidate paths are
    rejected unless they stay clear of every already placed path for all
    frame offsets within separation_window (so no cross-association is
    possible even while a track is coasting through misses).
    """

    duration_frames: int = 360
    frame_rate: float = 30.0
    presence_range: tuple[int, int] = (60, 140)
    box_w_range: tuple[float, float] = (0.10, 0.16)
    box_h_range: tuple[float, float] = (0.12, 0.20)
    min_speed: float = 0.0008
    max_speed: float = 0.0025
    separation_window: int = 20
    separation_margin: float = 0.01
    placement_retries: int = 500
    noise: NoiseSpec = field(default_factory=NoiseSpec)


def _box_around(cx: float, cy: float, w: float, h: float) -> BBox:
    # clamp against float dust at the frame border
    return BBox(
        max(0.0, cx - w / 2),
        max(0.0, cy - h / 2),
        min(1.0, cx + w / 2),
        min(1.0, cy + h / 2),
    )


def _uniform(rng: random.Random, lo: float, hi: float) -> float:
    return lo + (hi - lo) * rng.random()


def _uniform_int(rng: random.Random, lo: int, hi: int) -> int:
    # inclusive bounds; rng.random() < 1.0 keeps the result <= hi
    return lo + int(rng.random() * (hi - lo + 1))


def _gauss(rng: random.Random) -> float:
    # Box-Muller on top of random() only, for cross-version stability
    u1 = 1.0 - rng.random()
    u2 = rng.random()
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def generate(
    scenario: Scenario,
    *,
    stream_id: str = "sim",
    start_timestamp_ms: int = DEFAULT_START_TIMESTAMP_MS,
    confidence_range: tuple[float, float] = (0.6, 0.95),
) -> tuple[list[DetectionFrame], GroundTruth]:
    """Render a scenario to detection frames plus its ground truth.

    Deterministic for a fixed scenario: the RNG is seeded from scenario.seed
    and consumed in frame-major, person-minor order.
    """
    rng = random.Random(scenario.seed)
    noise = scenario.noise
    conf_lo, conf_hi = confidence_range
    ms_per_frame = 1000.0 / scenario.frame_rate

    consecutive_dropouts = [0] * len(scenario.persons)
    frames: list[DetectionFrame] = []
    for f in range(scenario.duration_frames):
        detections: list[Detection] = []
        for i, person in enumerate(scenario.persons):
            if not person.present_at(f):
                consecutive_dropouts[i] = 0
                continue
            if noise.dropout_prob > 0.0 and noise.max_consecutive_dropouts > 0:
                if (
                    rng.random() < noise.dropout_prob
                    and consecutive_dropouts[i] < noise.max_consecutive_dropouts
                ):
                    consecutive_dropouts[i] += 1
                    continue
            consecutive_dropouts[i] = 0
            cx, cy = person.center_at(f)
            if noise.jitter_sigma > 0.0:
                cx += _gauss(rng) * noise.jitter_sigma
                cy += _gauss(rng) * noise.jitter_sigma
                cx = min(max(cx, person.box_w / 2), 1.0 - person.box_w / 2)
                cy = min(max(cy, person.box_h / 2), 1.0 - person.box_h / 2)
            confidence = _uniform(rng, conf_lo, conf_hi)
            detections.append(Detection(_box_around(cx, cy, person.box_w, person.box_h), confidence))
        frames.append(
            DetectionFrame(
                stream_id=stream_id,
                frame_index=f,
                timestamp_ms=start_timestamp_ms + round(f * ms_per_frame),
                detections=tuple(detections),
            )
        )

    truth = GroundTruth(
        person_count=len(scenario.persons),
        intervals=tuple((p.enter_frame, p.exit_frame) for p in scenario.persons),
    )
    return frames, truth


def _path_centers(path: PersonPath, frames: np.ndarray) -> np.ndarray:
    t = (frames - path.enter_frame) / (path.exit_frame - path.enter_frame)
    sx, sy = path.start_center
    ex, ey = path.end_center
    return np.stack([sx + t * (ex - sx), sy + t * (ey - sy)], axis=1)


def _paths_conflict(a: PersonPath, b: PersonPath, window: int, margin: float) -> bool:
    """True if a's box can overlap b's box at any frame offset within window.

    Checking offset pairs (not just simultaneous frames) guarantees that a
    track coasting on a stale box can never overlap another person.
    """
    half_w = (a.box_w + b.box_w) / 2 + margin
    half_h = (a.box_h + b.box_h) / 2 + margin
    fa = np.arange(a.enter_frame, a.exit_frame)
    ca = _path_centers(a, fa)
    for offset in range(-window, window + 1):
        fb = fa + offset
        mask = (fb >= b.enter_frame) & (fb < b.exit_frame)
        if not mask.any():
            continue
        cb = _path_centers(b, fb[mask])
        delta = np.abs(ca[mask] - cb)
        if bool(np.any((delta[:, 0] < half_w) & (delta[:, 1] < half_h))):
            return True
    return False


def _draw_path(rng: random.Random, params: ScenarioParams) -> PersonPath | None:
    lo, hi = params.presence_range
    hi = min(hi, params.duration_frames)
    lo = min(lo, hi)
    length = _uniform_int(rng, lo, hi)
    enter = _uniform_int(rng, 0, params.duration_frames - length)
    box_w = _uniform(rng, *params.box_w_range)
    box_h = _uniform(rng, *params.box_h_range)
    start = (
        _uniform(rng, box_w / 2, 1.0 - box_w / 2),
        _uniform(rng, box_h / 2, 1.0 - box_h / 2),
    )
    angle = _uniform(rng, 0.0, 2.0 * math.pi)
    speed = _uniform(rng, params.min_speed, params.max_speed)
    end = (
        start[0] + math.cos(angle) * speed * length,
        start[1] + math.sin(angle) * speed * length,
    )
    if not (box_w / 2 <= end[0] <= 1.0 - box_w / 2 and box_h / 2 <= end[1] <= 1.0 - box_h / 2):
        return None
    return PersonPath(enter, enter + length, start, end, box_w, box_h)


def random_scenario(
    seed: int, max_people: int, params: ScenarioParams | None = None
) -> Scenario:
    """Draw a scenario with 0..max_people separated persons, deterministically.

    Raises Unsatisfiable when a person cannot be placed within the retry
    budget while honoring the separation constraint.
    """
    if max_people < 0:
        raise InvalidScenario(f"max_people must be >= 0: {max_people}")
    params = params or ScenarioParams()
    rng = random.Random(seed)
    count = _uniform_int(rng, 0, max_people)
    persons: list[PersonPath] = []
    for _ in range(count):
        placed = False
        for _ in range(params.placement_retries):
            candidate = _draw_path(rng, params)
            if candidate is None:
                continue
            if any(
                _paths_conflict(candidate, other, params.separation_window, params.separation_margin)
                for other in persons
            ):
                continue
            persons.append(candidate)
            placed = True
            break
        if not placed:
            raise Unsatisfiable(
                f"could not place person {len(persons) + 1} of {count} "
                f"after {params.placement_retries} retries (seed {seed})"
            )
    return Scenario(
        seed=seed,
        persons=tuple(persons),
        duration_frames=params.duration_frames,
        frame_rate=params.frame_rate,
        noise=params.noise,
    )


def truth_path_for(stream_path: Path) -> Path:
    """Sidecar path for a stream file: same base name, .truth suffix."""
    return stream_path.with_suffix(".truth")


def write_stream(path: Path, frames: Sequence[DetectionFrame]) -> None:
    path.write_text("".join(serialize_frame(f) + "\n" for f in frames), encoding="utf-8")


def write_truth(path: Path, truth: GroundTruth) -> None:
    path.write_text(truth.to_json() + "\n", encoding="utf-8")
