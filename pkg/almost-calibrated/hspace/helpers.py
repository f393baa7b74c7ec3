from __future__ import annotations

import functools
import logging
import time

LOGGER = logging.getLogger(__name__)


def measure_time(func):
    """
    Logs the wall time of every call of the decorated function at INFO level.
    """
    @functools.wraps(func)
    def inner(*args, **kwargs):
        start_time = time.perf_counter()
        try:
            return func(*args, **kwargs)
        finally:
            ex_time = time.perf_counter() - start_time
            LOGGER.info("Execution time of %s: %.2f seconds", func.__qualname__, ex_time)

    return inner


def memoize(func):
    """
    Caches results of a pure function of hashable arguments (grids, integers).
    Cached numpy arrays are returned read-only so no caller can alter the cache.
    """
    _cache = {}

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        key = (args, frozenset(kwargs.items()))
        if key in _cache:
            return _cache[key]
        response = func(*args, **kwargs)
        _freeze(response)
        _cache[key] = response
        return response

    wrapper.cache_clear = _cache.clear
    return wrapper


def _freeze(value) -> None:
    if hasattr(value, "setflags"):
        value.setflags(write=False)
    elif isinstance(value, (tuple, list)):
        for item in value:
            _freeze(item)
    elif isinstance(value, dict):
        for item in value.values():
            _freeze(item)
