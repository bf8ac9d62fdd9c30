"""
Process-wide memoization for expensive, immutable intermediate results.

Graded meshes and numeric Poincaré constants are rebuilt many times across a
sweep or a verify run; both are pure functions of their arguments, so they
are cached here under an LRU policy.
"""
from __future__ import annotations

import functools
import hashlib
import threading
from collections import OrderedDict
from typing import Any, Callable, Dict, Hashable, Optional, Tuple, TypeVar

F = TypeVar("F", bound=Callable[..., Any])


class PerformanceCache:
    """
    LRU cache split into namespaces ("mesh", "poincare", ...).

    Features:
    - one access order shared by all namespaces, so ``max_size`` bounds the total
    - md5 keys built from the call arguments
    - an RLock around every access; sweep workers share the instance
    """

    def __init__(self, max_size: int = 256):
        """
        Initialize performance cache.

        Args:
            max_size: Maximum number of cached items across namespaces
        """
        self.max_size = max_size
        self._store: "OrderedDict[Tuple[str, str], Any]" = OrderedDict()
        self._hits: Dict[str, int] = {}
        self._misses: Dict[str, int] = {}
        self._lock = threading.RLock()

    def _evict_if_needed(self) -> None:
        """Remove oldest items if cache exceeds max size."""
        while len(self._store) > self.max_size:
            self._store.popitem(last=False)

    @staticmethod
    def make_key(*args: Any, **kwargs: Any) -> str:
        """Create a stable cache key from arguments."""
        key_data = repr(args) + repr(sorted(kwargs.items()))
        return hashlib.md5(key_data.encode()).hexdigest()

    def get(self, namespace: str, key: str) -> Optional[Any]:
        with self._lock:
            slot = (namespace, key)
            if slot in self._store:
                self._store.move_to_end(slot)
                self._hits[namespace] = self._hits.get(namespace, 0) + 1
                return self._store[slot]
            self._misses[namespace] = self._misses.get(namespace, 0) + 1
            return None

    def set(self, namespace: str, key: str, value: Any) -> None:
        with self._lock:
            slot = (namespace, key)
            self._store[slot] = value
            self._store.move_to_end(slot)
            self._evict_if_needed()

    def clear(self) -> None:
        """Clear all cached data."""
        with self._lock:
            self._store.clear()
            self._hits.clear()
            self._misses.clear()

    def get_stats(self) -> Dict[str, Any]:
        """Get cache statistics."""
        with self._lock:
            sizes: Dict[str, int] = {}
            for namespace, _ in self._store:
                sizes[namespace] = sizes.get(namespace, 0) + 1
            return {
                "entries": sizes,
                "hits": dict(self._hits),
                "misses": dict(self._misses),
                "total_size": len(self._store),
                "max_size": self.max_size,
            }


# Global cache instance
_global_cache = PerformanceCache()


def cached(namespace: str) -> Callable[[F], F]:
    """
    Decorator memoizing a pure function in the global cache.

    Arguments must have a faithful ``repr``; numpy arrays are not accepted.
    """

    def decorator(func: F) -> F:
        @functools.wraps(func)
        def wrapper(*args: Hashable, **kwargs: Hashable) -> Any:
            key = PerformanceCache.make_key(func.__qualname__, *args, **kwargs)
            hit = _global_cache.get(namespace, key)
            if hit is not None:
                return hit
            result = func(*args, **kwargs)
            _global_cache.set(namespace, key, result)
            return result

        return wrapper  # type: ignore[return-value]

    return decorator


def get_cache_stats() -> Dict[str, Any]:
    """
    Get cache statistics.

    Returns:
        Dict with per-namespace sizes, hits and misses.
    """
    return _global_cache.get_stats()


def clear_all_caches() -> None:
    """Clear all caches to free memory."""
    _global_cache.clear()
