"""Tests for the Logger."""

import json

from multigraph_moments.log import Logger


class TestLogger:
    def test_text_mode(self, tmp_path, capsys):
        log_file = tmp_path / "run.log"
        logger = Logger(log_file=log_file, json_mode=False)
        logger.info("solved", sweeps=14, mse=1.234567891e-20)

        out = capsys.readouterr().out
        assert "solved (sweeps=14 mse=1.23457e-20)" in out
        assert "solved" in log_file.read_text()

    def test_json_mode(self, capsys):
        logger = Logger(json_mode=True)
        logger.info("hello json", n=3)

        record = json.loads(capsys.readouterr().out.strip())
        assert record["msg"] == "hello json"
        assert record["level"] == "info"
        assert record["n"] == 3
        assert "ts" in record
        assert "elapsed_s" in record

    def test_json_mode_from_env(self, clean_env, monkeypatch, capsys):
        monkeypatch.setenv("LOG_FORMAT", "json")
        Logger().info("from env")
        assert json.loads(capsys.readouterr().out)["msg"] == "from env"

    def test_warn_to_stderr(self, capsys):
        Logger(json_mode=False).warn("warning!")
        captured = capsys.readouterr()
        assert "warning!" in captured.err
        assert captured.out == ""

    def test_debug_silent_by_default(self, clean_env, capsys):
        logger = Logger(json_mode=False)
        logger.debug("hidden")
        assert not logger.debug_enabled
        assert capsys.readouterr().out == ""

    def test_debug_enabled_by_env(self, clean_env, monkeypatch, capsys):
        monkeypatch.setenv("DEBUG", "1")
        logger = Logger(json_mode=False)
        logger.debug("shown")
        assert logger.debug_enabled
        assert "shown" in capsys.readouterr().out

    def test_stage_events(self, capsys):
        logger = Logger(json_mode=True)
        logger.stage_start("solve-beta", n=10)
        logger.stage_end("solve-beta", "ok", exit_code=0)

        lines = capsys.readouterr().out.strip().splitlines()
        start, end = (json.loads(line) for line in lines)
        assert start["event"] == "stage_start"
        assert start["stage"] == "solve-beta"
        assert end["event"] == "stage_end"
        assert end["result"] == "ok"
        assert end["exit_code"] == 0

    def test_creates_parent_dirs(self, tmp_path):
        log_file = tmp_path / "deep" / "nested" / "run.log"
        Logger(log_file=log_file).info("deep")
        assert log_file.read_text().strip().endswith("deep")
