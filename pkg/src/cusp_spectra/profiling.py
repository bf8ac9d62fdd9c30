"""
Stage timing for CLI commands.

Each command stage runs inside ``StageProfiler.profile_block``; the collected
numbers end up in ``manifest.json`` and never in a primary result file.
"""
from __future__ import annotations

import time
import tracemalloc
from contextlib import contextmanager
from typing import Any, Dict, Iterator, Optional

try:
    import psutil
except ImportError:  # pragma: no cover - psutil is a dev extra
    psutil = None


def _rss() -> Optional[int]:
    if psutil is None:
        return None
    return int(psutil.Process().memory_info().rss)


class StageProfiler:
    """
    Wall time, CPU time and memory per named stage.

    Example:
        >>> profiler = StageProfiler()
        >>> with profiler.profile_block("assemble"):
        ...     dp = DiscreteProblem.assemble(mesh, problem)
        >>> profiler.timings()["assemble"]["wall_time"]
    """

    def __init__(self, trace_memory: bool = True):
        self.trace_memory = trace_memory
        self.profiles: Dict[str, Dict[str, Any]] = {}

    @contextmanager
    def profile_block(self, name: str) -> Iterator[None]:
        started_tracing = False
        if self.trace_memory and not tracemalloc.is_tracing():
            tracemalloc.start()
            started_tracing = True
        rss_before = _rss()
        start_time = time.perf_counter()
        start_process_time = time.process_time()
        try:
            yield
        finally:
            entry: Dict[str, Any] = {
                "wall_time": time.perf_counter() - start_time,
                "cpu_time": time.process_time() - start_process_time,
            }
            if started_tracing:
                entry["memory_peak"] = tracemalloc.get_traced_memory()[1]
                tracemalloc.stop()
            rss_after = _rss()
            if rss_before is not None and rss_after is not None:
                entry["rss_delta"] = rss_after - rss_before
            # repeated stage names accumulate
            previous = self.profiles.get(name)
            if previous is not None:
                entry["wall_time"] += previous["wall_time"]
                entry["cpu_time"] += previous["cpu_time"]
                entry["calls"] = previous.get("calls", 1) + 1
            self.profiles[name] = entry

    def timings(self) -> Dict[str, Dict[str, Any]]:
        return {name: dict(entry) for name, entry in self.profiles.items()}

    def total_wall_time(self) -> float:
        return sum(entry["wall_time"] for entry in self.profiles.values())
