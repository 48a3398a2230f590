import json
import os

import pytest

from footfall.cli import main
from footfall.config import load_config
from footfall.simulate import GroundTruth

BASE = ["--timezone", "UTC"]


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestReplay:
    def test_simulated_day_summary_matches_truth(self, capsys, tmp_path, hundred_crossing_file):
        data = tmp_path / "data"
        code, out, _ = run(
            capsys, "replay", "--input", str(hundred_crossing_file), "--data-dir", str(data), *BASE
        )
        assert code == 0
        assert "people_counted=100" in out
        assert "traffic=50" in out

    def test_empty_input(self, capsys, tmp_path):
        stream = tmp_path / "empty.jsonl"
        stream.write_text("")
        code, out, _ = run(
            capsys, "replay", "--input", str(stream), "--data-dir", str(tmp_path / "d"), *BASE
        )
        assert code == 0
        assert "people_counted=0" in out and "traffic=0" in out

    def test_garbage_input_exit_2_with_line_number(self, capsys, tmp_path):
        stream = tmp_path / "bad.jsonl"
        stream.write_text(
            '{"stream_id":"cam0","frame_index":0,"timestamp_ms":0,"detections":[]}\n'
            "garbage\n"
        )
        code, _, err = run(
            capsys, "replay", "--input", str(stream), "--data-dir", str(tmp_path / "d"), *BASE
        )
        assert code == 2
        assert "line 2" in err

    def test_lenient_accepts_unknown_fields(self, capsys, tmp_path):
        record = {
            "stream_id": "cam0",
            "frame_index": 0,
            "timestamp_ms": 0,
            "detections": [],
            "extra": True,
        }
        stream = tmp_path / "extra.jsonl"
        stream.write_text(json.dumps(record) + "\n")
        strict_code, _, _ = run(
            capsys, "replay", "--input", str(stream), "--data-dir", str(tmp_path / "a"), *BASE
        )
        lenient_code, _, _ = run(
            capsys,
            "replay", "--input", str(stream), "--data-dir", str(tmp_path / "b"), "--lenient", *BASE,
        )
        assert strict_code == 2
        assert lenient_code == 0


class TestSimulate:
    def test_fixed_seed_byte_identical(self, capsys, tmp_path):
        args = ["simulate", "--seed", "7", "--people", "4", *BASE]
        code1, _, _ = run(capsys, *args, "--out", str(tmp_path / "a.jsonl"))
        code2, _, _ = run(capsys, *args, "--out", str(tmp_path / "b.jsonl"))
        assert code1 == code2 == 0
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
        assert (tmp_path / "a.truth").read_bytes() == (tmp_path / "b.truth").read_bytes()

    def test_zero_people_stream_of_empty_frames(self, capsys, tmp_path):
        out = tmp_path / "empty.jsonl"
        code, _, _ = run(capsys, "simulate", "--seed", "1", "--people", "0", "--out", str(out), *BASE)
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines and all(json.loads(l)["detections"] == [] for l in lines)
        truth = GroundTruth.from_json((tmp_path / "empty.truth").read_text())
        assert truth.person_count == 0

    def test_simulate_then_replay_matches_truth(self, capsys, tmp_path):
        out = tmp_path / "run.jsonl"
        code, _, _ = run(capsys, "simulate", "--seed", "21", "--people", "5", "--out", str(out), *BASE)
        assert code == 0
        truth = GroundTruth.from_json((tmp_path / "run.truth").read_text())
        code, stdout, _ = run(
            capsys, "replay", "--input", str(out), "--data-dir", str(tmp_path / "d"), *BASE
        )
        assert code == 0
        assert f"people_counted={truth.person_count} " in stdout


class TestTransactionsAndExport:
    @pytest.fixture
    def replayed_store(self, capsys, tmp_path, hundred_crossing_file):
        data = tmp_path / "data"
        code, _, _ = run(
            capsys, "replay", "--input", str(hundred_crossing_file), "--data-dir", str(data), *BASE
        )
        assert code == 0
        return data

    def test_set_transactions_and_export_row(self, capsys, replayed_store, tmp_path):
        code, out, _ = run(
            capsys,
            "transactions", "--date", "2019-07-01", "--count", "10",
            "--data-dir", str(replayed_store), *BASE,
        )
        assert code == 0
        assert "conversion_rate=20.00" in out

        target = tmp_path / "export.csv"
        code, _, _ = run(
            capsys, "export", "--out", str(target), "--data-dir", str(replayed_store), *BASE
        )
        assert code == 0
        assert target.read_text(encoding="utf-8") == (
            "date,people_counted,traffic,unpaired,transactions,conversion_rate\n"
            "2019-07-01,100,50,0,10,20.00\n"
        )

    def test_unknown_date_exit_4(self, capsys, replayed_store):
        code, _, err = run(
            capsys,
            "transactions", "--date", "2001-01-01", "--count", "3",
            "--data-dir", str(replayed_store), *BASE,
        )
        assert code == 4
        assert "no record" in err

    def test_negative_count_exit_2(self, capsys, replayed_store):
        code, _, _ = run(
            capsys,
            "transactions", "--date", "2019-07-01", "--count", "-1",
            "--data-dir", str(replayed_store), *BASE,
        )
        assert code == 2

    def test_export_empty_store_header_only(self, capsys, tmp_path):
        target = tmp_path / "empty.csv"
        code, _, _ = run(
            capsys, "export", "--out", str(target), "--data-dir", str(tmp_path / "d"), *BASE
        )
        assert code == 0
        assert target.read_text() == (
            "date,people_counted,traffic,unpaired,transactions,conversion_rate\n"
        )

    def test_export_to_stdout(self, capsys, replayed_store):
        code, out, _ = run(capsys, "export", "--out", "-", "--data-dir", str(replayed_store), *BASE)
        assert code == 0
        assert out.startswith("date,people_counted")


class TestReport:
    def test_report_writes_csv_and_figures(self, capsys, tmp_path, hundred_crossing_file):
        data = tmp_path / "data"
        run(capsys, "replay", "--input", str(hundred_crossing_file), "--data-dir", str(data), *BASE)
        run(
            capsys,
            "transactions", "--date", "2019-07-01", "--count", "10", "--data-dir", str(data), *BASE,
        )
        out_dir = tmp_path / "report"
        code, out, _ = run(capsys, "report", "--out", str(out_dir), "--data-dir", str(data), *BASE)
        assert code == 0
        for name in ("daily.csv", "trend.png", "peak_hours.png"):
            path = out_dir / name
            assert path.exists() and path.stat().st_size > 0, name
        assert (out_dir / "daily.csv").read_text().splitlines()[1] == "2019-07-01,100,50,0,10,20.00"


class TestConfig:
    def test_precedence_flags_over_env_over_file(self, tmp_path, monkeypatch):
        config_path = tmp_path / "footfall.json"
        config_path.write_text(json.dumps({"timezone": "Asia/Kolkata", "min_hits": 5}))
        monkeypatch.setenv("FOOTFALL_MIN_HITS", "4")
        cfg = load_config(config_path, overrides={"timezone": "UTC"})
        assert cfg.timezone == "UTC"  # flag wins
        assert cfg.min_hits == 4  # env beats file
        monkeypatch.delenv("FOOTFALL_MIN_HITS")
        cfg = load_config(config_path)
        assert cfg.min_hits == 5

    def test_unknown_config_key_rejected(self, tmp_path):
        config_path = tmp_path / "bad.json"
        config_path.write_text(json.dumps({"frame_rate": 30}))
        with pytest.raises(ValueError):
            load_config(config_path)

    def test_unknown_timezone_rejected(self):
        with pytest.raises(Exception):
            load_config(None, overrides={"timezone": "Mars/Olympus"})

    def test_env_booleans(self, monkeypatch):
        monkeypatch.setenv("FOOTFALL_FRAMES_OVER_HTTP", "yes")
        cfg = load_config(None)
        assert cfg.frames_over_http is True

    def test_cli_uses_config_file(self, capsys, tmp_path):
        data = tmp_path / "from-config"
        config_path = tmp_path / "cfg.json"
        config_path.write_text(json.dumps({"data_dir": str(data), "timezone": "UTC"}))
        stream = tmp_path / "s.jsonl"
        stream.write_text("")
        code, _, _ = run(capsys, "replay", "--input", str(stream), "--config", str(config_path))
        assert code == 0
        assert data.is_dir()


class TestDeterministicReplays:
    def test_two_replays_identical_exports(self, capsys, tmp_path, hundred_crossing_file):
        exports = []
        for name in ("one", "two"):
            data = tmp_path / name
            run(capsys, "replay", "--input", str(hundred_crossing_file), "--data-dir", str(data), *BASE)
            target = tmp_path / f"{name}.csv"
            run(capsys, "export", "--out", str(target), "--data-dir", str(data), *BASE)
            exports.append(target.read_bytes())
        assert exports[0] == exports[1]
