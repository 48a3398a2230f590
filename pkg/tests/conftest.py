import pytest

from footfall.ingest import BBox, Detection, DetectionFrame, serialize_frame
from footfall.simulate import DEFAULT_START_TIMESTAMP_MS, PersonPath, Scenario, generate

BASE_TS = DEFAULT_START_TIMESTAMP_MS  # 2019-07-01T09:00:00Z


def mk_frame(index, boxes=(), *, stream="cam0", ts=None, conf=0.9):
    """Build a frame from (x_min, y_min, x_max, y_max) tuples at ~30 fps."""
    if ts is None:
        ts = BASE_TS + index * 33
    dets = tuple(Detection(BBox(*b), conf) for b in boxes)
    return DetectionFrame(stream, index, ts, dets)


def spaced_scenario(n_persons, *, spacing=280, presence=120, seed=1):
    """Persons crossing one after another on the same path, far enough apart
    in time that any correct tracker counts them exactly."""
    persons = tuple(
        PersonPath(i * spacing, i * spacing + presence, (0.2, 0.3), (0.5, 0.6), 0.12, 0.16)
        for i in range(n_persons)
    )
    duration = (n_persons - 1) * spacing + presence + 40 if n_persons else 60
    return Scenario(seed=seed, persons=persons, duration_frames=duration)


@pytest.fixture(scope="session")
def hundred_crossing_day():
    """One simulated day: 100 crossings (50 visitors), all inside hour 9 UTC."""
    frames, truth = generate(spaced_scenario(100))
    lines = [serialize_frame(f) for f in frames]
    return lines, truth


@pytest.fixture(scope="session")
def hundred_crossing_file(hundred_crossing_day, tmp_path_factory):
    lines, _ = hundred_crossing_day
    path = tmp_path_factory.mktemp("streams") / "day.jsonl"
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path
