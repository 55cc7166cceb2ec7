from __future__ import annotations

from typing import Any, Dict, List

from .logging_utils import RunLogger


class TrainingMonitor:
    """Per-epoch progress log plus the in-memory history used for reports."""

    def __init__(self, run_name: str = "class2simi"):
        self.run_name = run_name
        self.logger = RunLogger(f"class2simi.monitor.{run_name}")
        self.history: List[Dict[str, Any]] = []

    def log_training_progress(self, epoch: int, metrics: Dict[str, Any]) -> None:
        record = {"epoch": epoch, **metrics}
        self.history.append(record)
        self.logger.info("Epoch finished", **record)

    def reset(self) -> None:
        self.history = []
