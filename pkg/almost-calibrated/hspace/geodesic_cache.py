from __future__ import annotations

import hashlib
import threading
from collections import OrderedDict

import numpy as np

from .calibrated_space import BackgroundData
from .epsilon_problem import SolverSettings
from .torus_discretization import ScalarField

DEFAULT_MAX_BYTES = 256 * 2 ** 20


def distance_key(bg: BackgroundData, phi0: ScalarField, phi1: ScalarField, schedule: tuple[float, ...],
                 settings: SolverSettings) -> tuple:
    """
    Key of a distance computation: digests of the background and endpoint values,
    the schedule and the solver settings.
    """
    digest = hashlib.sha256()
    for array in (bg.omega, bg.alpha.matrices, phi0.values, phi1.values):
        digest.update(np.ascontiguousarray(array).tobytes())
    return (bg.grid, bg.theta_hat, digest.hexdigest(), tuple(schedule), settings)


class DistanceCache:
    """
    Least recently used cache of distance results.
    It stores results in an ordered dict: the most recently used one at the bottom,
    the least recently used at the head. Safe to share between worker threads.
    Bounded both by entry count and by the summed nbytes of the stored values;
    the newest entry is kept even when it alone exceeds max_bytes.
    """

    def __init__(self, maxsize: int = 64, max_bytes: int = DEFAULT_MAX_BYTES):
        self.__max_size = maxsize
        self.__max_bytes = max_bytes
        self.__cache = OrderedDict()
        self.__sizes = {}
        self.total_bytes = 0
        self.__lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def put(self, key: tuple, value) -> None:
        """
        Adds a result to the bottom of the cache, dropping heads while over the count or byte bound
        @param key: see distance_key
        @param value: the distance result
        @return: None
        """
        with self.__lock:
            self.total_bytes -= self.__sizes.pop(key, 0)
            self.__cache[key] = value
            self.__cache.move_to_end(key)
            self.__sizes[key] = int(getattr(value, "nbytes", 0))
            self.total_bytes += self.__sizes[key]
            while len(self.__cache) > 1 and (len(self.__cache) > self.__max_size
                                             or self.total_bytes > self.__max_bytes):
                head, _ = self.__cache.popitem(last=False)
                self.total_bytes -= self.__sizes.pop(head)

    def get(self, key: tuple):
        """
        Retrieves a result and makes it the most recently used
        @param key: see distance_key
        @return: the stored result or None on a miss
        """
        with self.__lock:
            if key not in self.__cache:
                self.misses += 1
                return None
            self.hits += 1
            self.__cache.move_to_end(key)
            return self.__cache[key]

    def clear(self) -> None:
        with self.__lock:
            self.__cache = OrderedDict()
            self.__sizes = {}
            self.hits = self.misses = self.total_bytes = 0

    def __len__(self) -> int:
        return len(self.__cache)
