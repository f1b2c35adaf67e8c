"""
Centralized Timing and Counter Collection for Verification Runs

Provides lightweight in-memory metrics for the expensive computations
(p-quotient steps, descendant searches, BFS enumerations, discriminant
scans). Reports embed the timing snapshot.

Usage:
    from services import metrics

    with metrics.timed("pquotient", "gn_1"):
        result = p_quotient(...)
    metrics.record_counter("pgen", "nodes_visited")
    print(metrics.get_summary())
"""

import threading
import time
from collections import defaultdict, deque
from contextlib import contextmanager
from datetime import datetime, timezone
from typing import Any, Dict, Optional

import structlog

logger = structlog.get_logger(__name__)


class MetricsCollector:
    """Thread-safe timing and counter collector"""

    def __init__(self):
        self._lock = threading.Lock()

        # Counters
        self.counters = defaultdict(int)  # {(section, name): count}
        self.errors = defaultdict(int)  # {(section, error_type): count}

        # Durations (keep last 1000 measurements per key)
        self.timings = defaultdict(lambda: deque(maxlen=1000))  # {(section, name): [durations]}

        self.start_time = time.time()

        logger.debug("metrics_collector_initialized")

    def record_timing(self, section: str, name: str, duration_ms: float, error: Optional[str] = None):
        """Record one timed computation"""
        with self._lock:
            self.timings[(section, name)].append(duration_ms)
            if error:
                self.errors[(section, error)] += 1

        logger.debug(
            "timing_recorded",
            section=section,
            name=name,
            duration_ms=round(duration_ms, 2),
            error=error
        )

    def record_counter(self, section: str, name: str, amount: int = 1):
        """Increase a named counter"""
        with self._lock:
            self.counters[(section, name)] += amount

    def get_metrics(self) -> Dict[str, Any]:
        """Get current metrics snapshot"""
        with self._lock:
            return {
                "timestamp": datetime.now(timezone.utc).isoformat(),
                "uptime_seconds": int(time.time() - self.start_time),
                "timings": self._get_timing_metrics(),
                "counters": {f"{s}.{n}": c for (s, n), c in sorted(self.counters.items())},
                "errors": self._get_error_metrics()
            }

    def get_timings(self) -> Dict[str, float]:
        """Total milliseconds per timed key"""
        with self._lock:
            return {
                f"{section}.{name}": round(sum(durations), 2)
                for (section, name), durations in sorted(self.timings.items())
            }

    def _get_timing_metrics(self) -> Dict[str, Any]:
        """Calculate duration statistics"""
        stats = {}

        for (section, name), durations in sorted(self.timings.items()):
            if not durations:
                continue

            ordered = sorted(durations)
            count = len(ordered)

            stats[f"{section}.{name}"] = {
                "count": count,
                "min_ms": round(ordered[0], 2),
                "max_ms": round(ordered[-1], 2),
                "p50_ms": round(ordered[int(count * 0.50)], 2),
                "total_ms": round(sum(ordered), 2),
                "avg_ms": round(sum(ordered) / count, 2)
            }

        return stats

    def _get_error_metrics(self) -> Dict[str, Any]:
        """Calculate error metrics"""
        by_type = {f"{section}/{error}": count for (section, error), count in self.errors.items()}
        return {
            "total": sum(self.errors.values()),
            "by_type": by_type
        }

    def get_summary(self) -> str:
        """Get human-readable summary"""
        metrics = self.get_metrics()

        lines = [
            "="*70,
            "SCHUR-SIGMA TOOLKIT - TIMING SUMMARY",
            "="*70,
            f"Uptime: {metrics['uptime_seconds']}s",
        ]

        if metrics["timings"]:
            lines.extend(["", "Timings (ms):"])
            for key, stats in metrics["timings"].items():
                lines.append(f"  {key}: total {stats['total_ms']}ms over {stats['count']} run(s)")

        if metrics["counters"]:
            lines.extend(["", "Counters:"])
            for key, count in metrics["counters"].items():
                lines.append(f"  {key}: {count}")

        if metrics["errors"]["total"] > 0:
            lines.extend(["", f"Errors: {metrics['errors']['total']} total"])

        lines.append("="*70)

        return "\n".join(lines)


# Global singleton instance
_metrics_collector: Optional[MetricsCollector] = None
_lock = threading.Lock()


def get_metrics_collector() -> MetricsCollector:
    """Get or create the global metrics collector"""
    global _metrics_collector

    if _metrics_collector is None:
        with _lock:
            if _metrics_collector is None:
                _metrics_collector = MetricsCollector()

    return _metrics_collector


@contextmanager
def timed(section: str, name: str):
    """Time the enclosed block and record it, also when it raises"""
    start = time.perf_counter()
    error = None
    try:
        yield
    except Exception as e:
        error = type(e).__name__
        raise
    finally:
        duration_ms = (time.perf_counter() - start) * 1000
        get_metrics_collector().record_timing(section, name, duration_ms, error)


# Convenience functions
def record_timing(section: str, name: str, duration_ms: float, error: Optional[str] = None):
    """Record a timing"""
    get_metrics_collector().record_timing(section, name, duration_ms, error)


def record_counter(section: str, name: str, amount: int = 1):
    """Increase a counter"""
    get_metrics_collector().record_counter(section, name, amount)


def get_metrics() -> Dict[str, Any]:
    """Get current metrics"""
    return get_metrics_collector().get_metrics()


def get_timings() -> Dict[str, float]:
    """Get total timings per key"""
    return get_metrics_collector().get_timings()


def get_summary() -> str:
    """Get metrics summary"""
    return get_metrics_collector().get_summary()
