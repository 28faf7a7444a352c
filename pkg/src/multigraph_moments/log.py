from __future__ import annotations

import json
import os
import sys
import time
from pathlib import Path


class Logger:
    """Run logger with text and JSON Lines modes.

    Writes to stdout (warnings to stderr) and, when given a path, appends the
    same line to a log file.

    Usage:
        logger = Logger(log_file=Path("out/run.log"))
        logger.stage_start("solve-beta", n=200)
        logger.info("sweep", sweep=3, mse=1.2e-9)
        logger.stage_end("solve-beta", result="converged", iterations=14)
    """

    def __init__(self, log_file: Path | None = None, json_mode: bool | None = None) -> None:
        self._log_file = log_file
        self._json_mode = json_mode if json_mode is not None else (
            os.environ.get("LOG_FORMAT", "").lower() == "json"
        )
        self._debug = bool(os.environ.get("DEBUG"))
        self._start_time = time.time()

        if log_file:
            log_file.parent.mkdir(parents=True, exist_ok=True)

    @property
    def debug_enabled(self) -> bool:
        return self._debug

    def debug(self, message: str, **extra: object) -> None:
        if self._debug:
            self._emit("debug", message, **extra)

    def info(self, message: str, **extra: object) -> None:
        self._emit("info", message, **extra)

    def warn(self, message: str, **extra: object) -> None:
        self._emit("warn", message, **extra)

    def error(self, message: str, **extra: object) -> None:
        self._emit("error", message, **extra)

    def stage_start(self, stage: str, **extra: object) -> None:
        self._emit("info", f"[{stage}] Started", stage=stage, event="stage_start", **extra)

    def stage_end(self, stage: str, result: str, **extra: object) -> None:
        self._emit(
            "info",
            f"[{stage}] {result.upper()}",
            stage=stage,
            event="stage_end",
            result=result,
            **extra,
        )

    def _emit(self, level: str, message: str, **extra: object) -> None:
        if self._json_mode:
            record = {
                "ts": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                "elapsed_s": round(time.time() - self._start_time, 2),
                "level": level,
                "msg": message,
                **extra,
            }
            line = json.dumps(record, ensure_ascii=False, default=str)
        else:
            ts = time.strftime("%H:%M:%S")
            detail = " ".join(f"{k}={_short(v)}" for k, v in extra.items())
            line = f"[{ts}] {message}" + (f" ({detail})" if detail else "")

        print(line, file=sys.stderr if level in ("warn", "error") else sys.stdout)

        if self._log_file:
            with self._log_file.open("a") as f:
                f.write(line + "\n")


def _short(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)
