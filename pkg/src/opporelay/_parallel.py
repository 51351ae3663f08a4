"""Deterministic fan-out of per-trial work over a thread pool.

Results always come back in ascending trial order, so any reduction over
them is independent of the worker count.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "OPPORELAY_THREADS"


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw:
        try:
            k = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
        return max(1, k)
    return os.cpu_count() or 1


def map_trials(fn, trials: int, threads: int | None = None) -> np.ndarray:
    """Stack ``fn(t)`` for t in range(trials) along a new first axis."""
    threads = worker_count() if threads is None else max(1, int(threads))
    if trials < 1:
        raise ValueError("trials must be >= 1")

    def run(chunk):
        return [fn(t) for t in chunk]

    if threads == 1 or trials < 2:
        return np.asarray(run(range(trials)))
    bounds = np.linspace(0, trials, min(trials, threads * 4) + 1).astype(int)
    chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(run, chunks))
    return np.asarray([r for part in parts for r in part])
