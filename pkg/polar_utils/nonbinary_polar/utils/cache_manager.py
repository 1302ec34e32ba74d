"""
Cache management module with dynamic, TTL-based caching for the polar toolkit.
Holds spectra, distance matrices and kernel inverse tables keyed by content
fingerprints so repeated analysis of the same kernel/signal set is free.
"""

import functools
import hashlib
import re
import threading
import time
from collections import OrderedDict
from typing import Any, Callable, Dict, NamedTuple, Optional, TypeVar
import logging

import numpy as np

from ..core.exceptions import CacheError

logger = logging.getLogger(__name__)

F = TypeVar('F', bound=Callable[..., Any])

DEFAULT_MAX_SIZE = 1000
DEFAULT_TTL = 600  # seconds
CACHE_SIZES = {
    "distance_matrices": 256,
    "kernel_inverses": 256,
    "spectra": 20000,   # a q=8 search touches ~5000 kernels twice
}

_MISSING = object()


class CacheEntry(NamedTuple):
    value: Any
    expires_at: Optional[float]  # None = never

    def alive(self, now: float) -> bool:
        return self.expires_at is None or now < self.expires_at


def array_fingerprint(array: np.ndarray) -> str:
    """Stable short fingerprint of an array's dtype, shape and contents."""
    arr = np.ascontiguousarray(array)
    digest = hashlib.sha1(f"{arr.dtype}|{arr.shape}|".encode())
    digest.update(arr.tobytes())
    return digest.hexdigest()[:16]


class Cache:
    """
    One named cache. Entries are kept in recency order (most recent last) and
    the oldest entry is evicted once `max_size` is reached.
    """
    def __init__(self, name: str, ttl: int = DEFAULT_TTL, max_size: int = DEFAULT_MAX_SIZE):
        self.name = name
        self.default_ttl = ttl
        self.max_size = CACHE_SIZES.get(name, max_size)
        self.created_at = time.time()
        self.hits = 0
        self.misses = 0
        self._entries: "OrderedDict[str, CacheEntry]" = OrderedDict()
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self._entries)

    def lookup(self, key: str) -> Any:
        """Value for `key`, or the module sentinel when absent or expired."""
        with self._lock:
            entry = self._entries.get(key)
            if entry is not None and entry.alive(time.time()):
                self._entries.move_to_end(key)
                self.hits += 1
                return entry.value
            if entry is not None:
                del self._entries[key]
            self.misses += 1
            return _MISSING

    def get(self, key: str) -> Any:
        value = self.lookup(key)
        return None if value is _MISSING else value

    def set(self, key: str, value: Any, ttl: Optional[int] = None) -> None:
        lifetime = self.default_ttl if ttl is None else ttl
        expires_at = None if lifetime == 0 else time.time() + lifetime
        with self._lock:
            self._entries[key] = CacheEntry(value, expires_at)
            self._entries.move_to_end(key)
            while len(self._entries) > self.max_size:
                evicted, _ = self._entries.popitem(last=False)
                logger.debug(f"Cache '{self.name}': evicted '{evicted}'")

    def cleanup_expired(self) -> int:
        now = time.time()
        with self._lock:
            stale = [k for k, entry in self._entries.items() if not entry.alive(now)]
            for key in stale:
                del self._entries[key]
        if stale:
            logger.debug(f"Cache '{self.name}': dropped {len(stale)} expired entries")
        return len(stale)

    def is_idle(self) -> bool:
        """Empty and older than its TTL; the manager may drop it."""
        return not self._entries and (time.time() - self.created_at) > self.default_ttl

    def invalidate(self, key_pattern: str) -> int:
        """Drop entries whose key matches a regex. Returns the number dropped."""
        try:
            pattern = re.compile(key_pattern)
        except re.error as e:
            raise CacheError(f"Invalid invalidation pattern '{key_pattern}': {e}") from e
        with self._lock:
            matched = [k for k in self._entries if pattern.match(k)]
            for key in matched:
                del self._entries[key]
        if matched:
            logger.debug(f"Cache '{self.name}': invalidated {len(matched)} entries matching '{key_pattern}'")
        return len(matched)

    def stats(self) -> Dict[str, int]:
        return {"hits": self.hits, "misses": self.misses, "size": len(self._entries)}


class CacheManager:
    """Registry of named caches."""
    def __init__(self):
        self._caches: Dict[str, Cache] = {}
        self._lock = threading.RLock()

    def get_cache(self, cache_name: str, ttl: int = DEFAULT_TTL) -> Cache:
        with self._lock:
            cache = self._caches.get(cache_name)
            if cache is None or cache.is_idle():
                cache = Cache(cache_name, ttl)
                self._caches[cache_name] = cache
                logger.debug(f"Created cache '{cache_name}' (ttl {ttl}s, max {cache.max_size})")
            return cache

    def cleanup(self) -> None:
        with self._lock:
            for name in [n for n, c in self._caches.items() if c.is_idle()]:
                del self._caches[name]
                logger.debug(f"Dropped idle cache '{name}'")
            caches = list(self._caches.values())
        for cache in caches:
            cache.cleanup_expired()

    def invalidate(self, key_pattern: str) -> int:
        """Drop matching entries from every cache. Returns the number dropped."""
        try:
            re.compile(key_pattern)
        except re.error as e:
            raise CacheError(f"Invalid invalidation pattern '{key_pattern}': {e}") from e
        with self._lock:
            caches = list(self._caches.values())
        return sum(cache.invalidate(key_pattern) for cache in caches)

    def stats(self) -> Dict[str, Dict[str, int]]:
        with self._lock:
            return {name: cache.stats() for name, cache in sorted(self._caches.items())}

    def clear_all(self) -> None:
        with self._lock:
            self._caches.clear()
        logger.info("All caches cleared.")


cache_manager = CacheManager()


def clear_all_caches() -> None:
    cache_manager.clear_all()


def cached(cache_name: str, key_func: Optional[Callable[..., str]] = None, ttl: Optional[int] = DEFAULT_TTL):
    """
    Memoize a function in a named cache.

    Args:
        cache_name: Cache to store results in (created on demand)
        key_func: Builds the key from the call arguments; defaults to the
            function name joined with str() of every argument
        ttl: Entry lifetime in seconds (0 = never expires)

    Returned numpy arrays are made read-only since every caller shares them.
    """
    lifetime = DEFAULT_TTL if ttl is None else ttl

    def decorator(func: F) -> F:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            if key_func is not None:
                key = key_func(*args, **kwargs)
            else:
                parts = [str(a) for a in args] + [f"{k}={v}" for k, v in sorted(kwargs.items())]
                key = f"{func.__name__}::{'|'.join(parts)}"

            cache = cache_manager.get_cache(cache_name, lifetime)
            result = cache.lookup(key)
            if result is not _MISSING:
                return result

            result = func(*args, **kwargs)
            if isinstance(result, np.ndarray):
                result.setflags(write=False)
            cache.set(key, result, ttl=lifetime)
            cache_manager.cleanup()
            return result
        return wrapper  # type: ignore
    return decorator
