"""Logging helpers for Class2Simi

This module provides:
- One-call logging setup writing to stderr (stdout carries JSON/CSV output)
- Structured run logging with a JSON context suffix
- Stage timing used for report wall-clock fields
"""
import json
import logging
import sys
import time
from typing import Any, Dict, Optional

import numpy as np

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def configure_logging(level: str = "INFO") -> None:
    """Install the package log format on stderr."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    root.addHandler(handler)
    root.setLevel(getattr(logging, str(level).upper(), logging.INFO))


def _to_jsonable(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {k: _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    return value


class RunLogger:
    """Structured experiment logger

    Appends keyword context to the message as JSON so log lines stay
    greppable and machine-parsable.
    """

    def __init__(self, name: str = "class2simi"):
        self.logger = logging.getLogger(name)

    def info(self, message: str, **context):
        self._log(logging.INFO, message, context)

    def warning(self, message: str, **context):
        self._log(logging.WARNING, message, context)

    def error(self, message: str, **context):
        self._log(logging.ERROR, message, context)

    def debug(self, message: str, **context):
        self._log(logging.DEBUG, message, context)

    def _log(self, level: int, message: str, context: dict):
        if not self.logger.isEnabledFor(level):
            return
        if context:
            log_message = f"{message} | {json.dumps(_to_jsonable(context), sort_keys=True)}"
        else:
            log_message = message
        self.logger.log(level, log_message)


class StageTimer:
    """Wall-clock accounting per pipeline stage."""

    def __init__(self, logger: Optional[RunLogger] = None):
        self.logger = logger or RunLogger("class2simi.timing")
        self._timings: Dict[str, float] = {}
        self._started: Dict[str, float] = {}

    def start(self, stage: str) -> None:
        self._started[stage] = time.perf_counter()

    def stop(self, stage: str) -> float:
        elapsed = time.perf_counter() - self._started.pop(stage)
        self._timings[stage] = self._timings.get(stage, 0.0) + elapsed
        self.logger.debug("Stage finished", stage=stage, seconds=round(elapsed, 4))
        return elapsed

    def get_timings(self) -> Dict[str, float]:
        return {k: round(v, 4) for k, v in self._timings.items()}
