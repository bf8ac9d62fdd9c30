"""
Caching, stage profiling and concurrent access under sweep-like workloads.
"""
import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

import gc
import time
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed

import numpy as np
import pytest

from cusp_spectra.cache import PerformanceCache, cached, clear_all_caches, get_cache_stats
from cusp_spectra.mesh import build_cusp_mesh, cached_cusp_mesh
from cusp_spectra.profiling import StageProfiler


class TestPerformanceCache:
    """LRU store shared by all namespaces."""

    def test_hits_and_misses(self):
        cache = PerformanceCache(max_size=4)
        assert cache.get("mesh", "k") is None
        cache.set("mesh", "k", 1)
        assert cache.get("mesh", "k") == 1
        stats = cache.get_stats()
        assert stats["hits"] == {"mesh": 1}
        assert stats["misses"] == {"mesh": 1}

    def test_lru_eviction(self):
        cache = PerformanceCache(max_size=2)
        cache.set("mesh", "a", 1)
        cache.set("poincare", "b", 2)
        cache.get("mesh", "a")
        cache.set("mesh", "c", 3)
        # "b" was least recently used
        assert cache.get("poincare", "b") is None
        assert cache.get("mesh", "a") == 1
        assert cache.get_stats()["total_size"] == 2

    def test_namespaces_do_not_collide(self):
        cache = PerformanceCache()
        cache.set("mesh", "k", "m")
        cache.set("poincare", "k", "p")
        assert cache.get("mesh", "k") == "m"
        assert cache.get("poincare", "k") == "p"

    def test_stable_keys(self):
        assert PerformanceCache.make_key(2.0, 8, None) == PerformanceCache.make_key(2.0, 8, None)
        assert PerformanceCache.make_key(2.0, 8) != PerformanceCache.make_key(2.0, 9)
        assert PerformanceCache.make_key(x=1, y=2) == PerformanceCache.make_key(y=2, x=1)


class TestCachedDecorator:
    def setup_method(self):
        clear_all_caches()

    def test_memoized(self):
        calls = []

        @cached("test")
        def square(x):
            calls.append(x)
            return x * x

        assert square(3) == 9
        assert square(3) == 9
        assert square(4) == 16
        assert calls == [3, 4]
        assert get_cache_stats()["entries"]["test"] == 2

    def test_warm_mesh_is_faster(self):
        start = time.perf_counter()
        cold = cached_cusp_mesh(2.0, 48)
        cold_time = time.perf_counter() - start

        start = time.perf_counter()
        warm = cached_cusp_mesh(2.0, 48)
        warm_time = time.perf_counter() - start

        assert warm is cold
        assert warm_time < cold_time


class TestConcurrentAccess:
    """Sweep workers share the global cache."""

    def setup_method(self):
        clear_all_caches()
        gc.collect()

    def test_concurrent_mesh_requests(self):
        keys = [(g, N) for g in (1.5, 2.0, 3.0) for N in (4, 6, 8)] * 4
        with ThreadPoolExecutor(max_workers=8) as pool:
            futures = {pool.submit(cached_cusp_mesh, g, N): (g, N) for g, N in keys}
            results = {}
            for future in as_completed(futures):
                results.setdefault(futures[future], []).append(future.result())

        for (g, N), meshes in results.items():
            reference = build_cusp_mesh(g, N)
            for mesh in meshes:
                assert np.array_equal(mesh.vertices, reference.vertices)
                assert np.array_equal(mesh.triangles, reference.triangles)
        assert get_cache_stats()["entries"]["mesh"] == 9

    def test_threaded_cache_writes(self):
        cache = PerformanceCache(max_size=64)
        errors = []

        def worker(tid):
            try:
                for i in range(200):
                    cache.set("mesh", f"{tid}-{i % 16}", i)
                    cache.get("mesh", f"{(tid + 1) % 4}-{i % 16}")
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [threading.Thread(target=worker, args=(t,)) for t in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

        assert errors == []
        assert cache.get_stats()["total_size"] <= 64


class TestStageProfiler:
    def test_stage_entries(self):
        profiler = StageProfiler()
        with profiler.profile_block("mesh"):
            build_cusp_mesh(2.0, 16)
        entry = profiler.timings()["mesh"]
        assert entry["wall_time"] >= 0
        assert entry["cpu_time"] >= 0
        assert entry["memory_peak"] > 0

    def test_repeated_stage_accumulates(self):
        profiler = StageProfiler(trace_memory=False)
        for _ in range(3):
            with profiler.profile_block("solve"):
                time.sleep(0.001)
        entry = profiler.timings()["solve"]
        assert entry["calls"] == 3
        assert entry["wall_time"] >= 0.003
        assert "memory_peak" not in entry
        assert profiler.total_wall_time() == pytest.approx(entry["wall_time"])

    def test_records_on_error(self):
        profiler = StageProfiler(trace_memory=False)
        with pytest.raises(RuntimeError):
            with profiler.profile_block("bound"):
                raise RuntimeError("boom")
        assert "bound" in profiler.timings()
