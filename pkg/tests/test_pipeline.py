import json
import signal
import socket
import subprocess
import sys
import time
from pathlib import Path

import pytest

from raceoverlay import pipeline
from raceoverlay.cli import main
from raceoverlay.errors import ConfigError, Malformed
from raceoverlay.pipeline import FrameProcessor, bench, load_config, parse_config, replay, run
from raceoverlay.protocol import FrameMessage, decode

REPO = Path(__file__).resolve().parent.parent
DEMO = REPO / "configs" / "demo.json"
BENCH10 = REPO / "configs" / "bench10.json"


def demo_config(**overrides):
    from dataclasses import replace as dc_replace

    config = load_config(DEMO)
    if overrides:
        config = dc_replace(config, **overrides)
    return config


class TestConfigParsing:
    def test_demo_config_loads(self):
        config = load_config(DEMO)
        assert config.fps == 25.0
        assert len(config.scenario.cars) == 4
        assert len(config.templates) == 5

    def test_missing_field_names_path(self):
        raw = json.loads(DEMO.read_text())
        del raw["scenario"]["cars"][1]["driver_id"]
        with pytest.raises(ConfigError) as excinfo:
            parse_config(raw)
        assert "scenario.cars[1].driver_id" in str(excinfo.value)

    def test_bad_type_names_path(self):
        raw = json.loads(DEMO.read_text())
        raw["scenario"]["camera"]["focal_length"] = "long"
        with pytest.raises(ConfigError) as excinfo:
            parse_config(raw)
        assert "scenario.camera.focal_length" in str(excinfo.value)

    def test_record_replay_conflict(self):
        raw = json.loads(DEMO.read_text())
        raw["record"] = "a.jsonl"
        raw["replay"] = "b.jsonl"
        with pytest.raises(ConfigError) as excinfo:
            parse_config(raw)
        assert "record" in str(excinfo.value) and "replay" in str(excinfo.value)

    def test_default_templates_when_absent(self):
        raw = json.loads(DEMO.read_text())
        del raw["templates"]
        config = parse_config(raw)
        assert len(config.templates) == len(config.scenario.cars)


class TestFrameProcessor:
    def test_tracks_confirm_and_publish(self):
        config = demo_config()
        processor = FrameProcessor(config)
        message = None
        for frame_id in range(10):
            message = processor.process(frame_id, frame_id * 40000, config.templates)
        assert isinstance(message, FrameMessage)
        assert message.frame_id == 9
        assert len(message.tracks) == 4
        for track in message.tracks:
            assert track.state in ("confirmed", "coasting")
            assert 0 <= track.prior_index < 18
            if track.state == "confirmed":
                assert track.anchors, "confirmed tracks carry anchors"

    def test_disabled_template_removes_anchor(self):
        config = demo_config()
        processor = FrameProcessor(config)
        for frame_id in range(10):
            processor.process(frame_id, 0, config.templates)
        from dataclasses import replace as dc_replace

        toggled = tuple(
            dc_replace(t, enabled=False) if t.driver_id == 1 else t for t in config.templates
        )
        message = processor.process(10, 0, toggled)
        by_driver = {t.driver_id: t for t in message.tracks}
        assert by_driver[1].anchors == ()
        assert by_driver[2].anchors != ()


class TestRecordAndDeterminism:
    def test_record_writes_n_decodable_lines(self, tmp_path):
        record = tmp_path / "session.jsonl"
        config = demo_config(record=str(record), listen="127.0.0.1:0", fixed_clock=True)
        assert run(config, max_frames=40) == 0
        lines = record.read_bytes().splitlines(keepends=True)
        assert len(lines) == 40
        for i, line in enumerate(lines):
            message = decode(line)
            assert message.frame_id == i

    def test_fixed_clock_runs_are_byte_identical(self, tmp_path):
        recordings = []
        for name in ("a.jsonl", "b.jsonl"):
            record = tmp_path / name
            config = demo_config(record=str(record), listen="127.0.0.1:0", fixed_clock=True)
            assert run(config, max_frames=250) == 0
            recordings.append(record.read_bytes())
        assert recordings[0] == recordings[1]
        assert len(recordings[0].splitlines()) == 250

    def test_fixed_clock_timestamps(self, tmp_path):
        record = tmp_path / "t.jsonl"
        config = demo_config(record=str(record), listen="127.0.0.1:0", fixed_clock=True)
        run(config, max_frames=3)
        stamps = [decode(line).timestamp_us for line in record.read_bytes().splitlines()]
        assert stamps == [0, 40000, 80000]


class TestReplay:
    def make_recording(self, tmp_path) -> Path:
        record = tmp_path / "session.jsonl"
        config = demo_config(record=str(record), listen="127.0.0.1:0", fixed_clock=True)
        run(config, max_frames=10)
        return record

    def test_replay_preserves_frame_ids(self, tmp_path, monkeypatch):
        record = self.make_recording(tmp_path)
        published = []
        monkeypatch.setattr(
            pipeline.FrameBus, "publish", lambda self, message: published.append(message)
        )
        assert replay(record, "127.0.0.1:0", fps=1000.0) == 0
        assert [m.frame_id for m in published] == list(range(10))
        # timestamps rewritten to the replay clock
        original = [decode(line).timestamp_us for line in record.read_bytes().splitlines()]
        assert [m.timestamp_us for m in published] != original

    def test_empty_file_clean_exit(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_bytes(b"")
        assert replay(empty, "127.0.0.1:0", fps=25.0) == 0

    def test_corrupt_line_names_line_number(self, tmp_path):
        record = self.make_recording(tmp_path)
        lines = record.read_bytes().splitlines(keepends=True)
        lines[6] = b'{"type":"frame","broken\n'
        record.write_bytes(b"".join(lines))
        with pytest.raises(Malformed) as excinfo:
            replay(record, "127.0.0.1:0", fps=25.0)
        assert "line 7" in str(excinfo.value)


class TestBench:
    def test_report_shape_and_canonical_line(self, capsys):
        config = load_config(BENCH10)
        report = bench(config, 50)
        out = capsys.readouterr().out
        parsed = json.loads(out)
        assert parsed["type"] == "bench"
        assert parsed["frames"] == 50
        assert parsed["fps"] > 0
        assert parsed["p50_us"] <= parsed["p99_us"]
        assert report["frames"] == 50
        # canonical: sorted keys, one newline
        assert list(parsed) == sorted(parsed)
        assert out.endswith("\n") and out.count("\n") == 1

    def test_single_frame_percentiles_collapse(self, capsys):
        config = demo_config()
        report = bench(config, 1)
        capsys.readouterr()
        assert report["p50_us"] == report["p99_us"]

    def test_more_cars_cost_more(self, capsys):
        one_car = json.loads(BENCH10.read_text())
        one_car["scenario"]["cars"] = one_car["scenario"]["cars"][:1]
        small = parse_config(one_car)
        big = load_config(BENCH10)
        # warm up, then measure
        bench(small, 50)
        bench(big, 50)
        report_small = bench(small, 300)
        report_big = bench(big, 300)
        capsys.readouterr()
        assert report_small["p50_us"] <= report_big["p50_us"]


class TestCli:
    def test_bad_config_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"scenario": {"track": {"a": -1}}}')
        code = main(["bench", "--config", str(bad), "--frames", "1"])
        capsys.readouterr()
        assert code == 2

    def test_config_error_names_field(self, tmp_path, capsys):
        raw = json.loads(DEMO.read_text())
        raw["record"] = "a.jsonl"
        raw["replay"] = "b.jsonl"
        bad = tmp_path / "conflict.json"
        bad.write_text(json.dumps(raw))
        code = main(["run", "--config", str(bad)])
        err = capsys.readouterr().err
        assert code == 2
        assert "record" in err and "replay" in err

    def test_replay_missing_file_exits_3(self, capsys):
        code = main(["replay", "--input", "/nonexistent.jsonl", "--listen", "127.0.0.1:0", "--fps", "25"])
        capsys.readouterr()
        assert code == 3

    def test_bench_cli_prints_report(self, capsys):
        code = main(["bench", "--config", str(BENCH10), "--frames", "5"])
        out = capsys.readouterr().out
        assert code == 0
        assert json.loads(out)["frames"] == 5

    def test_export_dataset_cli(self, tmp_path, capsys):
        out_file = tmp_path / "data.jsonl"
        code = main(
            ["export-dataset", "--config", str(DEMO), "--frames", "10", "--out", str(out_file)]
        )
        capsys.readouterr()
        assert code == 0
        lines = out_file.read_bytes().splitlines()
        assert len(lines) == 40  # 4 visible cars x 10 frames
        for line in lines:
            decode(line)

    def test_run_frames_flag_and_record(self, tmp_path, capsys):
        record = tmp_path / "cli.jsonl"
        code = main(
            [
                "run",
                "--config",
                str(DEMO),
                "--listen",
                "127.0.0.1:0",
                "--record",
                str(record),
                "--fixed-clock",
                "--frames",
                "12",
                "--seed",
                "99",
            ]
        )
        capsys.readouterr()
        assert code == 0
        assert len(record.read_bytes().splitlines()) == 12


class TestInterrupt:
    def _spawn(self, port: int) -> subprocess.Popen:
        return subprocess.Popen(
            [
                sys.executable,
                "-m",
                "raceoverlay",
                "run",
                "--config",
                str(DEMO),
                "--listen",
                f"127.0.0.1:{port}",
            ],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
        )

    def test_sigint_exits_cleanly_and_releases_port(self, tmp_path):
        port = _free_port()
        proc = self._spawn(port)
        try:
            _wait_for_port(port, timeout=10.0)
            time.sleep(0.5)
            proc.send_signal(signal.SIGINT)
            code = proc.wait(timeout=10)
            assert code == 0
        finally:
            if proc.poll() is None:
                proc.kill()
        # port is free again
        probe = socket.socket()
        probe.bind(("127.0.0.1", port))
        probe.close()

    def test_sigint_with_connected_console_still_exits(self):
        # connection handler threads are not daemons; shutdown must close
        # live connections or the interpreter would wait on them forever
        from websockets.sync.client import connect

        from raceoverlay.protocol import Hello, encode

        port = _free_port()
        proc = self._spawn(port)
        conn = None
        try:
            _wait_for_port(port, timeout=10.0)
            conn = connect(f"ws://127.0.0.1:{port}", open_timeout=5)
            conn.send(encode(Hello(role="console")).decode())
            conn.recv(timeout=5)  # server hello
            conn.recv(timeout=5)  # config
            conn.recv(timeout=5)  # first frame: stream is live
            proc.send_signal(signal.SIGINT)
            code = proc.wait(timeout=10)
            assert code == 0
        finally:
            if conn is not None:
                conn.close()
            if proc.poll() is None:
                proc.kill()


def _free_port() -> int:
    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()
    return port


def _wait_for_port(port: int, timeout: float) -> None:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        try:
            with socket.create_connection(("127.0.0.1", port), timeout=0.5):
                return
        except OSError:
            time.sleep(0.1)
    raise TimeoutError(f"port {port} never opened")
