"""Stage-keyed result cache.

Every pipeline stage's output is addressed by a key that hashes the dataset
id, the stage's own parameters, and the digests of its upstream keys. A
parameter change therefore invalidates exactly the stages downstream of it:
re-clustering with a new k reuses the embedding, while a new time window
invalidates everything after ingest.

The cache itself is an in-memory LRU bounded by a byte budget. Concurrent
requests for the same key are coalesced: one caller computes, the rest wait
for the same result. A failing producer propagates its exception to every
waiter and caches nothing.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
import threading
from collections import OrderedDict
from concurrent.futures import Future
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .errors import PreconditionError

STAGES = ("ingest", "dr1", "dr2", "cluster", "ccpca", "baseline", "zscore")
DEFAULT_BUDGET = 2 * 2**30  # 2 GiB


@dataclass(frozen=True)
class StageKey:
    stage: str
    dataset: str
    digest: str

    def __post_init__(self):
        if self.stage not in STAGES:
            raise PreconditionError(f"unknown stage: {self.stage!r}")


def stage_key(
    stage: str,
    dataset_id: str,
    params: dict | None = None,
    upstream: list[StageKey] | tuple[StageKey, ...] = (),
) -> StageKey:
    """Derive a key from parameters and upstream digests (hash chaining)."""
    payload = {
        "stage": stage,
        "dataset": dataset_id,
        "params": params or {},
        "upstream": [k.digest for k in upstream],
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return StageKey(
        stage=stage,
        dataset=dataset_id,
        digest=hashlib.sha256(canonical.encode()).hexdigest(),
    )


def estimate_size(value: Any) -> int:
    """Rough in-memory footprint in bytes; arrays dominate, so count those well."""
    if isinstance(value, np.ndarray):
        return int(value.nbytes)
    if isinstance(value, (list, tuple, set, frozenset)):
        return sys.getsizeof(value) + sum(estimate_size(v) for v in value)
    if isinstance(value, dict):
        return sys.getsizeof(value) + sum(
            estimate_size(k) + estimate_size(v) for k, v in value.items()
        )
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return sum(
            estimate_size(getattr(value, f.name)) for f in dataclasses.fields(value)
        )
    return sys.getsizeof(value)


class StageCache:
    """Byte-bounded LRU over stage results with request coalescing.

    hits counts requests served without running the producer (cached or
    coalesced onto another caller's computation); misses counts productions.
    """

    def __init__(self, max_bytes: int = DEFAULT_BUDGET):
        if max_bytes <= 0:
            raise PreconditionError("cache budget must be positive")
        self.max_bytes = max_bytes
        self._lock = threading.Lock()
        self._entries: OrderedDict[StageKey, tuple[Any, int]] = OrderedDict()
        self._bytes = 0
        self._hits = 0
        self._misses = 0
        self._inflight: dict[StageKey, Future] = {}

    def get_or_compute(
        self,
        key: StageKey,
        producer: Callable[[], Any],
        size_of: Callable[[Any], int] | None = None,
    ) -> tuple[Any, str]:
        """The stage value plus a "hit" or "miss" tag for this request."""
        with self._lock:
            if key in self._entries:
                self._hits += 1
                self._entries.move_to_end(key)
                return self._entries[key][0], "hit"
            future = self._inflight.get(key)
            if future is None:
                future = Future()
                self._inflight[key] = future
                owner = True
                self._misses += 1
            else:
                owner = False
                self._hits += 1

        if not owner:
            return future.result(), "hit"

        try:
            value = producer()
        except BaseException as exc:
            with self._lock:
                self._inflight.pop(key, None)
            future.set_exception(exc)
            raise

        nbytes = int(size_of(value) if size_of else estimate_size(value))
        with self._lock:
            self._inflight.pop(key, None)
            if nbytes <= self.max_bytes:
                self._entries[key] = (value, nbytes)
                self._bytes += nbytes
                while self._bytes > self.max_bytes:
                    _, (_, evicted) = self._entries.popitem(last=False)
                    self._bytes -= evicted
        future.set_result(value)
        return value, "miss"

    def peek(self, key: StageKey) -> bool:
        with self._lock:
            return key in self._entries

    def invalidate(self, dataset_id: str) -> int:
        """Evict every cached stage for one dataset; count of entries removed."""
        with self._lock:
            doomed = [k for k in self._entries if k.dataset == dataset_id]
            for k in doomed:
                _, nbytes = self._entries.pop(k)
                self._bytes -= nbytes
            return len(doomed)

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()
            self._bytes = 0

    def stats(self) -> dict:
        with self._lock:
            return {
                "entries": len(self._entries),
                "bytes": self._bytes,
                "hits": self._hits,
                "misses": self._misses,
            }
