"""
Stage timing for the feature pipeline.

Every video passes through featurize, dct, weighting, cfe, fta and fuse; the
monitor collects one StageTiming per pass so a batch run can log where its
time went. One monitor is shared by all worker threads of a batch.
"""

import logging
import threading
import time
from collections import deque
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Deque, Dict, List, Optional

logger = logging.getLogger(__name__)

FAILED_SUFFIX = "_FAILED"


@dataclass(frozen=True)
class StageTiming:
    """
    One timed pass through a stage.

    Attributes:
        stage: Stage name; failed passes carry the _FAILED suffix
        seconds: Wall time spent in the stage
        items: Videos or planes handled in the pass, when known
    """

    stage: str
    seconds: float
    items: Optional[int] = None

    @property
    def duration_ms(self) -> float:
        return self.seconds * 1000.0

    @property
    def failed(self) -> bool:
        return self.stage.endswith(FAILED_SUFFIX)


class PerformanceMonitor:
    """Thread-safe collector of stage timings, keeping the newest max_records."""

    def __init__(self, max_records: int = 10000):
        self._timings: Deque[StageTiming] = deque(maxlen=max_records)
        self._lock = threading.Lock()

    @property
    def timings(self) -> List[StageTiming]:
        with self._lock:
            return list(self._timings)

    @contextmanager
    def track(self, stage: str, items: Optional[int] = None):
        """Time the enclosed block under stage, or stage_FAILED if it raises."""
        started = time.perf_counter()
        name = stage + FAILED_SUFFIX
        try:
            yield
            name = stage
        finally:
            timing = StageTiming(name, time.perf_counter() - started, items if name == stage else None)
            with self._lock:
                self._timings.append(timing)

    def get_metrics_summary(self) -> Dict[str, Any]:
        """Per-stage call count and timing statistics in milliseconds."""
        timings = self.timings
        if not timings:
            return {"total_operations": 0}
        by_stage: Dict[str, List[float]] = {}
        for timing in timings:
            by_stage.setdefault(timing.stage, []).append(timing.duration_ms)
        operations = {
            stage: {
                "count": len(values),
                "total_ms": sum(values),
                "mean_ms": sum(values) / len(values),
                "min_ms": min(values),
                "max_ms": max(values),
            }
            for stage, values in by_stage.items()
        }
        return {"total_operations": len(timings), "operations": operations}

    def log_summary(self, level: int = logging.INFO) -> None:
        """One log line per stage, slowest total first."""
        operations = self.get_metrics_summary().get("operations", {})
        for stage, stats in sorted(operations.items(), key=lambda item: -item[1]["total_ms"]):
            logger.log(
                level,
                "%s: %d calls, %.1f ms total, %.2f ms mean",
                stage,
                stats["count"],
                stats["total_ms"],
                stats["mean_ms"],
            )
